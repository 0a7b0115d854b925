//! Benchmark grids: multi-seed runs of a codec over a list of target
//! distortions, with deterministic memory accounting and CSV / plot-data
//! output.
//!
//! For every `(target, seed)` a fresh message and a fresh reproduction
//! stream are drawn: the stream uses `seed` directly, the message uses a
//! seed derived from it, so the two are independent.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{CodecId, CodecParams, EncodeReport, GvwParams, HybParams, Limits, Settings};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::params::heuristic_settings;
use crate::rd::{d_max, RdCurve};
use crate::source::{sample_block, splitmix, Seed};

pub const DEFAULT_SEED_BASE: u64 = 20_100_000;
pub const DEFAULT_SEED_COUNT: usize = 32;
pub const TABLE_N: usize = 1050;

/// `count` consecutive seeds starting at the frozen base.
pub fn default_seeds(count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| DEFAULT_SEED_BASE + i).collect()
}

/// Seed of the source message paired with reproduction seed `seed`.
pub fn message_seed(seed: u64) -> Seed {
    Seed(splitmix::mix(seed ^ 0x6d65_7373_6167_6573))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamMode {
    /// Experimental defaults; see [`crate::params::heuristic_settings`].
    Heuristic,
    /// Fixed `l`, `gamma` and (LLZ) `alpha` at every target.
    Explicit { ell: usize, gamma: f64, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub model: Model,
    pub codec: CodecId,
    pub targets: Vec<f64>,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub mode: ParamMode,
    pub limits: Limits,
    /// Run grid points concurrently.
    pub parallel: bool,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let msg = if self.targets.is_empty() {
            Some("no target distortions".to_string())
        } else if self.seeds.is_empty() {
            Some("no seeds".to_string())
        } else if self.n == 0 {
            Some("n must be >= 1".to_string())
        } else {
            None
        };
        if let Some(m) = msg {
            return Err(Error::InvalidScenario(format!("{}: {m}", self.name)));
        }
        let dm = d_max(&self.model.source, &self.model.dist)?.value;
        if let Some(&d) = self.targets.iter().find(|&&d| !(d > 0.0 && d < dm)) {
            return Err(Error::DistortionOutOfRange { d, d_max: dm });
        }
        Ok(())
    }

    pub fn settings(&self, d: f64, seed: u64) -> Result<Settings> {
        match self.mode {
            ParamMode::Heuristic => {
                heuristic_settings(&self.model, d, self.codec, self.n, Seed(seed))
            }
            ParamMode::Explicit { ell, gamma, alpha } => {
                let s = Settings::new(self.n, ell, d, gamma, Seed(seed))?;
                if self.codec == CodecId::Llz {
                    s.with_alpha(alpha)
                } else {
                    Ok(s)
                }
            }
        }
    }

    pub fn params(&self, d: f64, seed: u64) -> Result<CodecParams> {
        CodecParams::new(
            self.codec,
            &self.model,
            self.settings(d, seed)?,
            self.limits,
        )
    }
}

/// One encoded and verified run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub params: CodecParams,
    pub report: EncodeReport,
    pub encode_seconds: f64,
}

/// Encodes a fresh message at `(d, seed)` and checks the decoder
/// reproduces the encoder's reconstruction.
pub fn run_point(spec: &ScenarioSpec, d: f64, seed: u64) -> Result<RunOutcome> {
    let annotate = |e: Error| Error::GridPoint {
        codec: spec.codec.to_string(),
        d_target: d,
        seed,
        source: Box::new(e),
    };
    let params = spec.params(d, seed).map_err(annotate)?;
    let x = sample_block(spec.model.source.pmf(), spec.n, message_seed(seed)).map_err(annotate)?;
    let t0 = Instant::now();
    let (stream, report) = params.encode(&x).map_err(annotate)?;
    let encode_seconds = t0.elapsed().as_secs_f64();
    if report.memory_symbols != params.memory_symbols() {
        return Err(annotate(Error::ParamInvariantViolation(format!(
            "encoder used {} reproduction symbols, parameters account for {}",
            report.memory_symbols,
            params.memory_symbols()
        ))));
    }
    let decoded = params.decode(&stream).map_err(annotate)?;
    if decoded != report.reconstruction {
        return Err(annotate(Error::ParamInvariantViolation(
            "decoder output differs from encoder reconstruction".into(),
        )));
    }
    Ok(RunOutcome {
        params,
        report,
        encode_seconds,
    })
}

/// Aggregate of all seeds at one target distortion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub codec: CodecId,
    pub d_target: f64,
    pub d_bar: f64,
    pub ell: usize,
    pub seeds: usize,
    pub d_achieved_mean: f64,
    pub d_achieved_std: f64,
    pub d_achieved_max: f64,
    /// Exact for GVW/HYB; the mean over seeds for LLZ.
    pub rate: f64,
    pub rate_std: f64,
    pub memory_symbols: u64,
    pub memory_bytes: u64,
    /// Mean encoder wall time per seed.
    pub encode_seconds: f64,
}

impl RunRecord {
    pub fn memory_mb(&self) -> f64 {
        self.memory_bytes as f64 / (1u64 << 20) as f64
    }
}

/// Bytes needed for `symbols` symbols at `ceil(log2 |A^|)` bits each.
pub fn memory_bytes(symbols: u64, repro_alphabet: usize) -> u64 {
    let bits = crate::codec::bits::ceil_log2(repro_alphabet as u64).max(1) as u64;
    (symbols * bits).div_ceil(8)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    // Constant samples (fixed-rate codecs) stay exact.
    if let Some(&first) = v.first() {
        if v.iter().all(|&x| x == first) {
            return (first, 0.0);
        }
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// All runs at target `d`, aggregated.
pub fn run_target(spec: &ScenarioSpec, d: f64) -> Result<(RunRecord, Vec<RunOutcome>)> {
    let runs = spec
        .seeds
        .iter()
        .map(|&s| run_point(spec, d, s))
        .collect::<Result<Vec<_>>>()?;
    let dist: Vec<f64> = runs.iter().map(|r| r.report.achieved_distortion).collect();
    let rates: Vec<f64> = runs.iter().map(|r| r.report.rate).collect();
    let (dm, ds) = mean_std(&dist);
    let (rm, rs) = mean_std(&rates);
    let first = &runs[0].params;
    let symbols = first.memory_symbols();
    let record = RunRecord {
        codec: spec.codec,
        d_target: d,
        d_bar: first.point().d_bar,
        ell: first.settings().ell,
        seeds: runs.len(),
        d_achieved_mean: dm,
        d_achieved_std: ds,
        d_achieved_max: dist.iter().copied().fold(0.0, f64::max),
        rate: rm,
        rate_std: rs,
        memory_symbols: symbols,
        memory_bytes: memory_bytes(symbols, spec.model.dist.repro_alphabet_size()),
        encode_seconds: runs.iter().map(|r| r.encode_seconds).sum::<f64>() / runs.len() as f64,
    };
    Ok((record, runs))
}

/// One record per target, in grid order.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let one = |&d: &f64| run_target(spec, d).map(|(r, _)| r);
    if spec.parallel {
        spec.targets.par_iter().map(one).collect()
    } else {
        spec.targets.iter().map(one).collect()
    }
}

/// `l W / (W + l - 1)`: GVW codebook size over HYB database size.
pub fn memory_ratio(gvw: &GvwParams, hyb: &HybParams) -> Result<f64> {
    if gvw.settings.ell != hyb.settings.ell || gvw.codewords != hyb.codewords {
        return Err(Error::ParamMismatch(format!(
            "GVW (l={}, W={}) and HYB (l={}, W={}) differ",
            gvw.settings.ell, gvw.codewords, hyb.settings.ell, hyb.codewords
        )));
    }
    Ok(gvw.memory_symbols() as f64 / hyb.memory_symbols() as f64)
}

pub fn write_csv<W: std::io::Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names, frozen.
pub const CSV_HEADER: [&str; 13] = [
    "codec",
    "d_target",
    "d_bar",
    "ell",
    "seeds",
    "d_achieved_mean",
    "d_achieved_std",
    "d_achieved_max",
    "rate",
    "rate_std",
    "memory_symbols",
    "memory_bytes",
    "encode_seconds",
];

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    write_csv(records, std::fs::File::create(path)?)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

/// Two blocks: `# curve` with `d rate` rows, then `# scatter` with
/// `codec d_achieved rate` rows.
pub fn write_plot_data<W: std::io::Write>(
    records: &[RunRecord],
    curve: &RdCurve,
    mut out: W,
) -> Result<()> {
    writeln!(out, "# curve")?;
    writeln!(out, "# d rate")?;
    for p in &curve.points {
        writeln!(out, "{} {}", p.distortion, p.rate)?;
    }
    writeln!(out)?;
    writeln!(out, "# scatter")?;
    writeln!(out, "# codec d_achieved rate")?;
    for r in records {
        writeln!(out, "{} {} {}", r.codec, r.d_achieved_mean, r.rate)?;
    }
    Ok(())
}

pub fn emit_plot_data(records: &[RunRecord], curve: &RdCurve, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_plot_data(records, curve, &mut f)?;
    f.flush()?;
    Ok(())
}

/// Limits for the reproduction grids; a few points need `l R` above the
/// interactive default.
pub fn table_limits() -> Limits {
    Limits {
        symbol_cap: 1 << 30,
        max_log2_size: 30.0,
    }
}

pub const TABLE1_TARGETS: [f64; 9] = [0.05, 0.08, 0.11, 0.14, 0.17, 0.2, 0.23, 0.26, 0.29];
pub const TABLE3_TARGETS: [f64; 9] = [0.04, 0.055, 0.07, 0.085, 0.1, 0.115, 0.13, 0.145, 0.16];
pub const TABLE4_TARGETS: [f64; 9] = [0.1, 0.16, 0.22, 0.28, 0.34, 0.4, 0.46, 0.52, 0.58];

/// Names accepted by [`builtin`].
pub const BUILTIN_SCENARIOS: [&str; 4] = ["table1", "table2", "table3", "table4"];

/// Built-in reproduction grids, one spec per codec:
///
/// * `table1`: Bern(0.4), GVW and LLZ;
/// * `table2`: Bern(0.4), HYB;
/// * `table3`: Bern(0.2), GVW, LLZ and HYB;
/// * `table4`: uniform on four letters, GVW, LLZ and HYB.
pub fn builtin(name: &str, seeds: &[u64]) -> Result<Vec<ScenarioSpec>> {
    let (model, targets, codecs): (Model, &[f64], &[CodecId]) = match name {
        "table1" => (
            Model::bernoulli_hamming(0.4)?,
            &TABLE1_TARGETS,
            &[CodecId::Gvw, CodecId::Llz],
        ),
        "table2" => (
            Model::bernoulli_hamming(0.4)?,
            &TABLE1_TARGETS,
            &[CodecId::Hyb],
        ),
        "table3" => (
            Model::bernoulli_hamming(0.2)?,
            &TABLE3_TARGETS,
            &[CodecId::Gvw, CodecId::Llz, CodecId::Hyb],
        ),
        "table4" => (
            Model::uniform_hamming(4)?,
            &TABLE4_TARGETS,
            &[CodecId::Gvw, CodecId::Llz, CodecId::Hyb],
        ),
        _ => {
            return Err(Error::InvalidScenario(format!(
                "unknown scenario {name:?}; expected one of {BUILTIN_SCENARIOS:?}"
            )))
        }
    };
    Ok(codecs
        .iter()
        .map(|&codec| ScenarioSpec {
            name: format!("{name}-{codec}"),
            model: model.clone(),
            codec,
            targets: targets.to_vec(),
            n: TABLE_N,
            seeds: seeds.to_vec(),
            mode: ParamMode::Heuristic,
            limits: table_limits(),
            parallel: false,
        })
        .collect())
}
