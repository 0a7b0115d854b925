use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid distortion matrix: {0}")]
    InvalidDistortion(String),

    #[error("distortion {d} outside the admissible range (0, {d_max})")]
    DistortionOutOfRange { d: f64, d_max: f64 },

    #[error("rate {r} outside the admissible range (0, {r_max})")]
    RateOutOfRange { r: f64, r_max: f64 },

    #[error("Blahut-Arimoto did not converge within {iterations} iterations (gap {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("requested {requested} symbols exceeds the cap of {cap}")]
    MemoryCap { requested: u64, cap: u64 },

    #[error("parameter invariant violated: {0}")]
    ParamInvariantViolation(String),

    #[error("no candidate windows to search")]
    EmptyCandidates,

    #[error("stream holds {actual} bits, expected {expected}")]
    StreamLengthMismatch { expected: u64, actual: u64 },

    #[error("stream exhausted while reading {wanted} bits at offset {offset}")]
    StreamExhausted { offset: u64, wanted: u32 },

    #[error("index {index} out of range for {count} candidates")]
    IndexOutOfRange { index: u64, count: u64 },

    #[error("pointer {position}+{length} runs past database end {m}")]
    PointerOutOfRange { position: u64, length: u64, m: u64 },

    #[error("degenerate constants: {0}")]
    DegenerateConstants(String),

    #[error("gamma {gamma} outside (0, {gamma_hat})")]
    GammaOutOfRange { gamma: f64, gamma_hat: f64 },

    #[error("epsilon {eps} outside (0, {eps_hat})")]
    EpsilonOutOfRange { eps: f64, eps_hat: f64 },

    #[error("invalid schedule argument: {0}")]
    InvalidSchedule(String),

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("malformed container: {0}")]
    MalformedContainer(String),

    #[error("database checksum {found:#06x} does not match stored {stored:#06x}; wrong seed or parameters")]
    SeedMismatch { stored: u16, found: u16 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("at {codec} D={d_target} seed={seed}: {source}")]
    GridPoint {
        codec: String,
        d_target: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
