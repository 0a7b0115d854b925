//! The GVW, LLZ and HYB encoder/decoder pipelines.
//!
//! Every codec is driven by a parameter object whose user-facing reals
//! (target distortion, slack `gamma`, LLZ overshoot `alpha`) are held as
//! integer micro-units. All derived quantities are computed from those
//! integers once, so an encoder and a decoder built from the same
//! settings agree bit for bit.
//!
//! Reproduction strings are drawn from a single SplitMix64 stream keyed
//! by the parameter seed. Symbol `j` of the stream is addressable
//! directly, so decoders read only the codewords or windows they need.

pub mod bits;
pub mod container;
pub mod gvw;
pub mod hyb;
pub mod llz;

use crate::error::{Error, Result};
use crate::matcher::SearchOptions;
use crate::model::Model;
use crate::rd::{self, d_max, distortion_rate, rate_distortion};
use crate::source::{database_checksum, Sampler, Seed, SymbolBlock, DEFAULT_SYMBOL_CAP};

pub use bits::{BitReader, BitWriter, Bitstream};

const MICRO: f64 = 1e6;

/// Tolerance used for `D(R)` when freezing the working distortion.
pub const D_BAR_TOL: f64 = 1e-9;

/// Converts a real to micro-units, rounding to nearest.
pub fn to_micros(x: f64) -> Result<u64> {
    if !x.is_finite() || x < 0.0 || x * MICRO > u64::MAX as f64 / 2.0 {
        return Err(Error::ParamInvariantViolation(format!(
            "{x} cannot be stored in micro-units"
        )));
    }
    Ok((x * MICRO).round() as u64)
}

pub fn from_micros(u: u64) -> f64 {
    u as f64 / MICRO
}

/// Resource guards enforced when parameters are derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    /// Largest database (in symbols) that may be materialized.
    pub symbol_cap: u64,
    /// Largest admissible `l * R`.
    pub max_log2_size: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            symbol_cap: DEFAULT_SYMBOL_CAP,
            max_log2_size: 28.0,
        }
    }
}

impl Limits {
    /// No guards at all; for deliberate large runs.
    pub fn unbounded() -> Self {
        Self {
            symbol_cap: u64::MAX,
            max_log2_size: 62.0,
        }
    }
}

/// User-facing settings shared by all three codecs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub n: usize,
    pub ell: usize,
    pub d_micros: u64,
    pub gamma_micros: u64,
    /// Only read by LLZ.
    pub alpha_micros: u64,
    pub seed: Seed,
}

impl Settings {
    pub fn new(n: usize, ell: usize, d: f64, gamma: f64, seed: Seed) -> Result<Self> {
        Ok(Self {
            n,
            ell,
            d_micros: to_micros(d)?,
            gamma_micros: to_micros(gamma)?,
            alpha_micros: 0,
            seed,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha_micros = to_micros(alpha)?;
        Ok(self)
    }

    pub fn d(&self) -> f64 {
        from_micros(self.d_micros)
    }

    pub fn gamma(&self) -> f64 {
        from_micros(self.gamma_micros)
    }

    pub fn alpha(&self) -> f64 {
        from_micros(self.alpha_micros)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ParamInvariantViolation("n must be >= 1".into()));
        }
        if self.ell == 0 {
            return Err(Error::ParamInvariantViolation("l must be >= 1".into()));
        }
        if self.gamma_micros == 0 {
            return Err(Error::ParamInvariantViolation("gamma must be > 0".into()));
        }
        Ok(())
    }
}

/// Quantities derived from `(model, D, gamma)` that every codec needs.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub d_target: f64,
    pub d_max: f64,
    /// `R(D)`.
    pub rd: f64,
    /// Coding rate `R = R(D) + gamma`.
    pub rate: f64,
    /// Working distortion the reproduction distribution is tuned to.
    pub d_bar: f64,
    /// Optimal reproduction distribution at `d_bar`.
    pub q_star: Vec<f64>,
}

impl OperatingPoint {
    /// `d_bar = D(R(D) + bar_offset)`.
    fn derive(model: &Model, d: f64, gamma: f64, bar_offset: f64, tol: f64) -> Result<Self> {
        let dm = d_max(&model.source, &model.dist)?;
        let rd = rate_distortion(&model.source, &model.dist, d, tol)?.rate;
        let target = rd + bar_offset;
        let r_zero = rd::rate_at_zero(&model.source, &model.dist)?;
        if target <= 0.0 || target >= r_zero {
            return Err(Error::ParamInvariantViolation(format!(
                "working rate R(D) {bar_offset:+} = {target} leaves (0, R(0+) = {r_zero})"
            )));
        }
        let d_bar = distortion_rate(&model.source, &model.dist, target, D_BAR_TOL)?;
        if !(d_bar > 0.0 && d_bar < dm.value) {
            return Err(Error::ParamInvariantViolation(format!(
                "working distortion {d_bar} outside (0, Dmax = {})",
                dm.value
            )));
        }
        let q_star = rate_distortion(&model.source, &model.dist, d_bar, tol)?.q_star;
        Ok(Self {
            d_target: d,
            d_max: dm.value,
            rd,
            rate: rd + gamma,
            d_bar,
            q_star,
        })
    }
}

fn default_tol(model: &Model) -> f64 {
    if model.dist.is_hamming() && (model.source.alphabet_size() == 2 || model.source.is_uniform()) {
        rd::CLOSED_FORM_TOL
    } else {
        rd::BA_TOL
    }
}

/// `floor(2^(l R))`, after checking the `l R` guard.
fn codebook_size(ell: usize, rate: f64, limits: &Limits) -> Result<u64> {
    let log2 = ell as f64 * rate;
    if log2 > limits.max_log2_size {
        return Err(Error::ParamInvariantViolation(format!(
            "l*R = {log2:.4} exceeds the memory guard {}",
            limits.max_log2_size
        )));
    }
    if log2 >= 63.0 {
        return Err(Error::ParamInvariantViolation(format!(
            "l*R = {log2:.4} does not fit a 64-bit index"
        )));
    }
    Ok(log2.exp2().floor() as u64)
}

fn check_distortion_range(model: &Model, d: f64) -> Result<()> {
    let dm = d_max(&model.source, &model.dist)?;
    if !(d > 0.0 && d < dm.value) {
        return Err(Error::DistortionOutOfRange { d, d_max: dm.value });
    }
    Ok(())
}

/// Parameters shared by the two fixed-rate codecs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub model: Model,
    pub settings: Settings,
    pub point: OperatingPoint,
    /// Candidate count `W = floor(2^(l R))`.
    pub codewords: u64,
    /// Index width `B = ceil(log2 W)`.
    pub index_bits: u32,
    /// `k = ceil(n / l)`.
    pub blocks: usize,
    pub limits: Limits,
    pub search: SearchOptions,
}

impl BlockParams {
    fn derive(model: &Model, settings: Settings, limits: Limits) -> Result<Self> {
        settings.check()?;
        let d = settings.d();
        check_distortion_range(model, d)?;
        let gamma = settings.gamma();
        let point = OperatingPoint::derive(model, d, gamma, gamma / 2.0, default_tol(model))?;
        if point.d_bar > d {
            return Err(Error::ParamInvariantViolation(format!(
                "working distortion {} exceeds target {d}",
                point.d_bar
            )));
        }
        let codewords = codebook_size(settings.ell, point.rate, &limits)?;
        if codewords < 2 {
            return Err(Error::ParamInvariantViolation(format!(
                "codebook size {codewords} < 2"
            )));
        }
        Ok(Self {
            model: model.clone(),
            settings,
            point,
            codewords,
            index_bits: bits::ceil_log2(codewords),
            blocks: settings.n.div_ceil(settings.ell),
            limits,
            search: SearchOptions::default(),
        })
    }

    /// `k * B`, the exact stream length.
    pub fn total_bits(&self) -> u64 {
        self.blocks as u64 * self.index_bits as u64
    }

    pub fn rate(&self) -> f64 {
        self.total_bits() as f64 / self.settings.n as f64
    }

    fn sampler(&self) -> Sampler {
        Sampler::new(&self.point.q_star).expect("q_star validated by the solver")
    }
}

/// GVW: `W` independent codewords of length `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct GvwParams(pub BlockParams);

/// HYB: one database of `m = W + l - 1` symbols, windows at every offset.
#[derive(Debug, Clone, PartialEq)]
pub struct HybParams(pub BlockParams);

impl GvwParams {
    pub fn new(model: &Model, settings: Settings, limits: Limits) -> Result<Self> {
        BlockParams::derive(model, settings, limits).map(Self)
    }

    /// `l * W`; the codebook is streamed, never stored.
    pub fn memory_symbols(&self) -> u64 {
        self.0.settings.ell as u64 * self.0.codewords
    }
}

impl HybParams {
    pub fn new(model: &Model, settings: Settings, limits: Limits) -> Result<Self> {
        let p = BlockParams::derive(model, settings, limits)?;
        let m = p.codewords + settings.ell as u64 - 1;
        if m > limits.symbol_cap {
            return Err(Error::MemoryCap {
                requested: m,
                cap: limits.symbol_cap,
            });
        }
        Ok(Self(p))
    }

    /// `m = W + l - 1`.
    pub fn db_len(&self) -> u64 {
        self.0.codewords + self.0.settings.ell as u64 - 1
    }

    pub fn memory_symbols(&self) -> u64 {
        self.db_len()
    }
}

impl std::ops::Deref for GvwParams {
    type Target = BlockParams;
    fn deref(&self) -> &BlockParams {
        &self.0
    }
}

impl std::ops::Deref for HybParams {
    type Target = BlockParams;
    fn deref(&self) -> &BlockParams {
        &self.0
    }
}

/// LLZ: greedy parsing against one database of `m = W + l - 1` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct LlzParams {
    pub model: Model,
    pub settings: Settings,
    pub point: OperatingPoint,
    pub db_len: u64,
    /// `floor((1 + alpha) l)`.
    pub cap: usize,
    /// `F = ceil(log2((1 + alpha) l))`.
    pub length_bits: u32,
    /// `ceil(log2 m)`.
    pub pointer_bits: u32,
    pub repro_alphabet: usize,
    pub limits: Limits,
    pub search: SearchOptions,
}

impl LlzParams {
    pub fn new(model: &Model, settings: Settings, limits: Limits) -> Result<Self> {
        settings.check()?;
        if settings.alpha_micros == 0 {
            return Err(Error::ParamInvariantViolation("alpha must be > 0".into()));
        }
        let d = settings.d();
        check_distortion_range(model, d)?;
        let gamma = settings.gamma();
        let point = OperatingPoint::derive(model, d, gamma, -gamma / 2.0, default_tol(model))?;
        if point.d_bar < d {
            return Err(Error::ParamInvariantViolation(format!(
                "working distortion {} below target {d}",
                point.d_bar
            )));
        }
        let w = codebook_size(settings.ell, point.rate, &limits)?;
        let db_len = w + settings.ell as u64 - 1;
        if db_len > limits.symbol_cap {
            return Err(Error::MemoryCap {
                requested: db_len,
                cap: limits.symbol_cap,
            });
        }
        // (1 + alpha) l = l (10^6 + alpha_mu) / 10^6, kept exact.
        let num = settings.ell as u128 * (1_000_000 + settings.alpha_micros as u128);
        let cap = (num / 1_000_000) as usize;
        let mut length_bits = 0u32;
        while (1u128 << length_bits) * 1_000_000 < num {
            length_bits += 1;
        }
        let pointer_bits = bits::ceil_log2(db_len);
        let repro_alphabet = model.dist.repro_alphabet_size();
        // The L = 1 fallback must be encodable as a literal.
        if literal_bits(1, repro_alphabet) >= pointer_bits {
            return Err(Error::ParamInvariantViolation(format!(
                "pointer width {pointer_bits} does not exceed single-literal width {}",
                literal_bits(1, repro_alphabet)
            )));
        }
        Ok(Self {
            model: model.clone(),
            settings,
            point,
            db_len,
            cap,
            length_bits,
            pointer_bits,
            repro_alphabet,
            limits,
            search: SearchOptions::default(),
        })
    }

    pub fn memory_symbols(&self) -> u64 {
        self.db_len
    }

    /// Whether a phrase of length `len` is sent as a literal.
    pub fn is_literal(&self, len: usize) -> bool {
        literal_bits(len, self.repro_alphabet) < self.pointer_bits
    }

    /// Cost of one phrase in bits.
    pub fn phrase_bits(&self, len: usize) -> u64 {
        let body = if self.is_literal(len) {
            literal_bits(len, self.repro_alphabet)
        } else {
            self.pointer_bits
        };
        self.length_bits as u64 + body as u64
    }

    fn sampler(&self) -> Sampler {
        Sampler::new(&self.point.q_star).expect("q_star validated by the solver")
    }
}

/// `ceil(len * log2 k)`: the smallest `t` with `2^t >= k^len`. Saturates at
/// 128 once `k^len` leaves `u128`.
pub fn literal_bits(len: usize, k: usize) -> u32 {
    let mut pow: u128 = 1;
    for _ in 0..len {
        match pow.checked_mul(k as u128) {
            Some(p) => pow = p,
            None => return 128,
        }
    }
    if pow <= 1 {
        0
    } else {
        128 - (pow - 1).leading_zeros()
    }
}

/// How an LLZ phrase is described.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhraseMode {
    Pointer,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phrase {
    pub length: usize,
    pub mode: PhraseMode,
    /// 1-based database position for pointers; 0 for literals.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeReport {
    pub total_bits: u64,
    /// `total_bits / n`.
    pub rate: f64,
    pub achieved_distortion: f64,
    /// LLZ only; empty for the fixed-rate codecs.
    pub phrase_log: Vec<Phrase>,
    pub reconstruction: SymbolBlock,
    /// Reproduction symbols the encoder worked against.
    pub memory_symbols: u64,
}

impl EncodeReport {
    fn new(
        model: &Model,
        x: &SymbolBlock,
        stream: &Bitstream,
        reconstruction: Vec<u8>,
        phrase_log: Vec<Phrase>,
        memory_symbols: u64,
    ) -> Self {
        let achieved_distortion = model.average_distortion(x.symbols(), &reconstruction);
        Self {
            total_bits: stream.bit_length(),
            rate: stream.bit_length() as f64 / x.len() as f64,
            achieved_distortion,
            phrase_log,
            reconstruction: SymbolBlock::from_raw(reconstruction, model.dist.repro_alphabet_size()),
            memory_symbols,
        }
    }
}

/// Check value stored in containers: first 64 stream symbols.
pub(crate) fn stream_checksum(sampler: &Sampler, seed: Seed) -> u16 {
    let mut head = [0u8; 64];
    sampler.fill(seed, 0, &mut head);
    database_checksum(head)
}

fn check_message(model: &Model, x: &SymbolBlock, n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::ParamMismatch(format!(
            "message has {} symbols, parameters expect {n}",
            x.len()
        )));
    }
    if x.alphabet_size() > model.source.alphabet_size() {
        return Err(Error::ParamMismatch(format!(
            "message alphabet {} exceeds source alphabet {}",
            x.alphabet_size(),
            model.source.alphabet_size()
        )));
    }
    Ok(())
}

/// Codec identifier as stored in containers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecId {
    Gvw = 1,
    Llz = 2,
    Hyb = 3,
}

impl CodecId {
    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            1 => Ok(CodecId::Gvw),
            2 => Ok(CodecId::Llz),
            3 => Ok(CodecId::Hyb),
            _ => Err(Error::MalformedContainer(format!("unknown codec id {b}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CodecId::Gvw => "gvw",
            CodecId::Llz => "llz",
            CodecId::Hyb => "hyb",
        }
    }
}

impl std::fmt::Display for CodecId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CodecId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gvw" => Ok(CodecId::Gvw),
            "llz" => Ok(CodecId::Llz),
            "hyb" => Ok(CodecId::Hyb),
            _ => Err(Error::Parse(format!("unknown codec {s:?}"))),
        }
    }
}

/// Parameters of any of the three codecs.
#[derive(Debug, Clone, PartialEq)]
pub enum CodecParams {
    Gvw(GvwParams),
    Llz(LlzParams),
    Hyb(HybParams),
}

impl CodecParams {
    pub fn new(codec: CodecId, model: &Model, settings: Settings, limits: Limits) -> Result<Self> {
        Ok(match codec {
            CodecId::Gvw => CodecParams::Gvw(GvwParams::new(model, settings, limits)?),
            CodecId::Llz => CodecParams::Llz(LlzParams::new(model, settings, limits)?),
            CodecId::Hyb => CodecParams::Hyb(HybParams::new(model, settings, limits)?),
        })
    }

    pub fn codec(&self) -> CodecId {
        match self {
            CodecParams::Gvw(_) => CodecId::Gvw,
            CodecParams::Llz(_) => CodecId::Llz,
            CodecParams::Hyb(_) => CodecId::Hyb,
        }
    }

    pub fn model(&self) -> &Model {
        match self {
            CodecParams::Gvw(p) => &p.model,
            CodecParams::Llz(p) => &p.model,
            CodecParams::Hyb(p) => &p.model,
        }
    }

    pub fn settings(&self) -> &Settings {
        match self {
            CodecParams::Gvw(p) => &p.settings,
            CodecParams::Llz(p) => &p.settings,
            CodecParams::Hyb(p) => &p.settings,
        }
    }

    pub fn point(&self) -> &OperatingPoint {
        match self {
            CodecParams::Gvw(p) => &p.point,
            CodecParams::Llz(p) => &p.point,
            CodecParams::Hyb(p) => &p.point,
        }
    }

    pub fn memory_symbols(&self) -> u64 {
        match self {
            CodecParams::Gvw(p) => p.memory_symbols(),
            CodecParams::Llz(p) => p.memory_symbols(),
            CodecParams::Hyb(p) => p.memory_symbols(),
        }
    }

    pub fn set_search(&mut self, search: SearchOptions) {
        match self {
            CodecParams::Gvw(p) => p.0.search = search,
            CodecParams::Llz(p) => p.search = search,
            CodecParams::Hyb(p) => p.0.search = search,
        }
    }

    pub fn encode(&self, x: &SymbolBlock) -> Result<(Bitstream, EncodeReport)> {
        match self {
            CodecParams::Gvw(p) => gvw::encode(x, p),
            CodecParams::Llz(p) => llz::encode(x, p),
            CodecParams::Hyb(p) => hyb::encode(x, p),
        }
    }

    pub fn decode(&self, stream: &Bitstream) -> Result<SymbolBlock> {
        match self {
            CodecParams::Gvw(p) => gvw::decode(stream, p),
            CodecParams::Llz(p) => llz::decode(stream, p),
            CodecParams::Hyb(p) => hyb::decode(stream, p),
        }
    }

    /// Check value over the first 64 reproduction-stream symbols.
    pub fn checksum(&self) -> u16 {
        let sampler = Sampler::new(&self.point().q_star).expect("q_star validated by the solver");
        stream_checksum(&sampler, self.settings().seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern04() -> Model {
        Model::bernoulli_hamming(0.4).unwrap()
    }

    #[test]
    fn literal_bits_values() {
        assert_eq!(literal_bits(10, 2), 10);
        assert_eq!(literal_bits(1, 3), 2);
        assert_eq!(literal_bits(2, 3), 4);
        assert_eq!(literal_bits(3, 3), 5);
        assert_eq!(literal_bits(5, 4), 10);
        assert_eq!(literal_bits(200, 2), 128);
        assert_eq!(literal_bits(0, 2), 0);
    }

    #[test]
    fn gvw_table_row() {
        let s = Settings::new(1050, 33, 0.05, 0.002, Seed(1)).unwrap();
        let p = GvwParams::new(&bern04(), s, Limits::default()).unwrap();
        assert_eq!(p.index_bits, 23);
        assert_eq!(p.blocks, 32);
        assert_eq!(p.total_bits(), 736);
        assert!(p.point.d_bar <= 0.05);
        assert_eq!(p.memory_symbols(), 33 * p.codewords);
    }

    #[test]
    fn llz_fields() {
        let s = Settings::new(1050, 33, 0.05, 0.03, Seed(1))
            .unwrap()
            .with_alpha(0.1)
            .unwrap();
        let p = LlzParams::new(&bern04(), s, Limits::default()).unwrap();
        assert_eq!(p.cap, 36);
        assert_eq!(p.length_bits, 6);
        assert!(p.point.d_bar >= 0.05);
        // l R = 33 * 0.714554 = 23.58, so m sits in (2^23, 2^24].
        assert_eq!(p.pointer_bits, 24);
        assert!(p.is_literal(10));
        assert!(!p.is_literal(30));
        assert_eq!(p.phrase_bits(10), 16);
        assert_eq!(p.phrase_bits(30), 30);
    }

    #[test]
    fn exact_length_field_at_power_of_two() {
        // (1 + 0.6) * 10 = 16 exactly: F = 4, cap = 16.
        let s = Settings::new(100, 10, 0.2, 0.03, Seed(0))
            .unwrap()
            .with_alpha(0.6)
            .unwrap();
        let p = LlzParams::new(&bern04(), s, Limits::default()).unwrap();
        assert_eq!(p.cap, 16);
        assert_eq!(p.length_bits, 4);
    }

    #[test]
    fn guards() {
        let m = bern04();
        let s = Settings::new(1050, 300, 0.05, 0.002, Seed(0)).unwrap();
        assert!(matches!(
            GvwParams::new(&m, s, Limits::default()),
            Err(Error::ParamInvariantViolation(_))
        ));
        let s = Settings::new(1050, 33, 0.45, 0.002, Seed(0)).unwrap();
        assert!(matches!(
            GvwParams::new(&m, s, Limits::default()),
            Err(Error::DistortionOutOfRange { .. })
        ));
        let s = Settings::new(1050, 33, 0.05, 0.002, Seed(0)).unwrap();
        let tight = Limits {
            symbol_cap: 1000,
            ..Limits::default()
        };
        assert!(matches!(
            HybParams::new(&m, s, tight),
            Err(Error::MemoryCap { .. })
        ));
    }

    #[test]
    fn micros_roundtrip() {
        assert_eq!(to_micros(0.05).unwrap(), 50_000);
        assert_eq!(to_micros(0.002).unwrap(), 2_000);
        assert_eq!(from_micros(290_000), 0.29);
        assert!(to_micros(-1.0).is_err());
        assert!(to_micros(f64::NAN).is_err());
    }
}
