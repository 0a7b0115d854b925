//! `rdlz`: rate-distortion curves, file encode/decode, parameter reports and
//! benchmark grids.
//!
//! Machine-readable `key=value` lines go to stdout, prose to stderr.
//! Exit codes: 0 success, 2 usage or validation, 3 runtime, 4 IO.

mod inputs;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rdlz_core::bench::{self, ParamMode, ScenarioSpec};
use rdlz_core::codec::container::Container;
use rdlz_core::codec::CodecParams;
use rdlz_core::params::{self, BLOCK_GAMMA, LLZ_ALPHA, LLZ_GAMMA};
use rdlz_core::rd::{self, d_max, rate_distortion};
use rdlz_core::source::sample_block;
use rdlz_core::{CodecId, Error as CoreError, Limits, Model, Seed, Settings, SymbolBlock};

/// Usage or validation failure detected by the front end (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser, Debug)]
#[command(
    name = "rdlz",
    version,
    about = "Lossy compression workbench: GVW, LLZ and HYB codecs"
)]
struct Cli {
    /// Worker threads for searches and benchmark grids.
    #[arg(long, global = true, env = "RDLZ_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample R(D) on a uniform grid over (0, Dmax) and write it as CSV.
    RdCurve(RdCurveArgs),
    /// Compress a symbol file (or a sampled message) into an RDC1 container.
    Encode(EncodeArgs),
    /// Reconstruct symbols from an RDC1 container.
    Decode(DecodeArgs),
    /// Print codec parameters and optional bound constants.
    Params(ParamsArgs),
    /// Run a built-in or custom benchmark grid.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// `bern:p`, `uniform:k` or a model file.
    #[arg(long, default_value = "bern:0.4")]
    source: String,
    /// `hamming` or a model file with `row` lines.
    #[arg(long, default_value = "hamming")]
    dist: String,
}

impl ModelArgs {
    fn model(&self) -> Result<Model> {
        inputs::parse_model(&self.source, &self.dist)
    }
}

#[derive(Args, Debug, Clone)]
struct LimitArgs {
    /// Largest materialized database, in symbols.
    #[arg(long)]
    symbol_cap: Option<u64>,
    /// Largest admissible `l R` (log2 of the candidate count).
    #[arg(long = "max-log2")]
    max_log2: Option<f64>,
}

impl LimitArgs {
    fn apply(&self, mut base: Limits) -> Limits {
        if let Some(c) = self.symbol_cap {
            base.symbol_cap = c;
        }
        if let Some(m) = self.max_log2 {
            base.max_log2_size = m;
        }
        base
    }
}

#[derive(Args, Debug, Clone)]
struct CodecArgs {
    #[arg(long)]
    codec: CodecId,
    /// Target distortion.
    #[arg(long = "D")]
    d: f64,
    /// Rate slack; defaults to 0.002 (GVW/HYB) or 0.03 (LLZ).
    #[arg(long)]
    gamma: Option<f64>,
    /// LLZ match-length headroom.
    #[arg(long)]
    alpha: Option<f64>,
    /// Block length; omit (or pass --heuristic) for the experimental default.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, conflicts_with = "ell")]
    heuristic: bool,
    /// Database / codebook seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl CodecArgs {
    fn settings(&self, model: &Model, n: usize) -> Result<Settings> {
        let seed = Seed(self.seed);
        let Some(ell) = self.ell else {
            let mut s = params::heuristic_settings(model, self.d, self.codec, n, seed)?;
            if let Some(g) = self.gamma {
                s = Settings::new(n, s.ell, self.d, g, seed)?.with_alpha(s.alpha())?;
            }
            if let Some(a) = self.alpha {
                s = s.with_alpha(a)?;
            }
            return Ok(s);
        };
        let (g, a) = match self.codec {
            CodecId::Llz => (LLZ_GAMMA, LLZ_ALPHA),
            _ => (BLOCK_GAMMA, 0.0),
        };
        Ok(
            Settings::new(n, ell, self.d, self.gamma.unwrap_or(g), seed)?
                .with_alpha(self.alpha.unwrap_or(a))?,
        )
    }

    fn params(&self, model: &Model, n: usize, limits: Limits) -> Result<CodecParams> {
        Ok(CodecParams::new(
            self.codec,
            model,
            self.settings(model, n)?,
            limits,
        )?)
    }
}

#[derive(Args, Debug)]
struct RdCurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    codec: CodecArgs,
    #[command(flatten)]
    limits: LimitArgs,
    /// Message length; required without --input, checked against it otherwise.
    #[arg(long)]
    n: Option<usize>,
    /// Symbol file to compress; a message is sampled from the source otherwise.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Seed of the sampled message; derived from --seed when omitted.
    #[arg(long)]
    message_seed: Option<u64>,
    /// Input holds eight binary symbols per byte.
    #[arg(long)]
    packed: bool,
    /// RDC1 container destination.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the encoder reconstruction as a symbol file.
    #[arg(long)]
    reconstruction: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// RDC1 container.
    #[arg(long)]
    input: PathBuf,
    /// Symbol file destination.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write eight binary symbols per byte.
    #[arg(long)]
    packed: bool,
    /// Regenerate the database under this seed instead of the stored one.
    #[arg(long)]
    seed: Option<u64>,
    /// Original symbol file; reports the distortion against it.
    #[arg(long)]
    original: Option<PathBuf>,
    #[arg(long)]
    original_packed: bool,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args, Debug)]
struct ParamsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    codec: Option<CodecId>,
    #[arg(long = "D")]
    d: f64,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, default_value_t = bench::TABLE_N)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Single-block bound constants and the block length they prescribe.
    #[arg(long, requires_all = ["gamma", "eps"])]
    theorem2: bool,
    #[arg(long)]
    eps: Option<f64>,
    /// Block-length / slack schedule for a message-length budget `g`.
    #[arg(long, requires_all = ["g", "c"])]
    theorem3: bool,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Built-in grid: table1, table2, table3 or table4.
    #[arg(long, conflicts_with_all = ["codecs", "targets"])]
    scenario: Option<String>,
    #[command(flatten)]
    model: ModelArgs,
    /// Codecs of a custom grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    codecs: Vec<CodecId>,
    /// Target distortions of a custom grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<f64>,
    #[arg(long, default_value_t = bench::TABLE_N)]
    n: usize,
    /// Fixed block length for a custom grid (heuristic otherwise).
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = bench::DEFAULT_SEED_COUNT)]
    seeds: usize,
    #[arg(long, default_value_t = bench::DEFAULT_SEED_BASE)]
    seed_base: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Plot-data destination (curve and scatter blocks).
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Curve samples in the plot data.
    #[arg(long, default_value_t = 100)]
    curve_points: usize,
    #[command(flatten)]
    limits: LimitArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    if let Some(c) = e.downcast_ref::<CoreError>() {
        return core_code(c);
    }
    if e.downcast_ref::<io::Error>().is_some() {
        return 4;
    }
    3
}

fn core_code(e: &CoreError) -> u8 {
    use CoreError::*;
    match e {
        GridPoint { source, .. } => core_code(source),
        Io(_) => 4,
        InvalidPmf(_)
        | InvalidDistortion(_)
        | DistortionOutOfRange { .. }
        | RateOutOfRange { .. }
        | MemoryCap { .. }
        | ParamInvariantViolation(_)
        | DegenerateConstants(_)
        | GammaOutOfRange { .. }
        | EpsilonOutOfRange { .. }
        | InvalidSchedule(_)
        | InvalidScenario(_)
        | Parse(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            bail!(Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::RdCurve(a) => cmd_rd_curve(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Params(a) => cmd_params(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_rd_curve(a: RdCurveArgs) -> Result<()> {
    if a.points == 0 {
        bail!(Usage("--points must be positive".into()));
    }
    let model = a.model.model()?;
    let tol = rd_tol(&model);
    let curve = rd::rd_curve(&model.source, &model.dist, a.points, tol)?;
    let mut out = open_out(a.out.as_ref())?;
    writeln!(out, "d,rate,slope")?;
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.distortion, p.rate, p.slope)?;
    }
    out.flush()?;
    drop(out);
    if let Some(p) = &a.out {
        let dm = d_max(&model.source, &model.dist)?;
        println!(
            "points={} d_max={} out={}",
            curve.points.len(),
            dm.value,
            p.display()
        );
    }
    Ok(())
}

fn rd_tol(model: &Model) -> f64 {
    if model.dist.is_hamming() && (model.source.alphabet_size() == 2 || model.source.is_uniform()) {
        rd::CLOSED_FORM_TOL
    } else {
        rd::BA_TOL
    }
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let model = a.model.model()?;
    let x = match &a.input {
        Some(path) => {
            let syms = inputs::read_symbols(path, a.packed, a.n)?;
            SymbolBlock::new(syms, model.source.alphabet_size())?
        }
        None => {
            let n =
                a.n.ok_or_else(|| Usage("--n is required when no --input is given".into()))?;
            let seed = a
                .message_seed
                .map(Seed)
                .unwrap_or_else(|| bench::message_seed(a.codec.seed));
            sample_block(model.source.pmf(), n, seed)?
        }
    };
    if x.is_empty() {
        bail!(Usage("empty message".into()));
    }
    let params = a
        .codec
        .params(&model, x.len(), a.limits.apply(Limits::default()))?;
    eprintln!(
        "encoding {} symbols with {} (l={})",
        x.len(),
        params.codec(),
        params.settings().ell
    );
    let (stream, report) = params.encode(&x)?;
    let s = params.settings();
    let pt = params.point();
    println!("codec={}", params.codec());
    println!("n={}", s.n);
    println!("ell={}", s.ell);
    println!("gamma={}", s.gamma());
    if params.codec() == CodecId::Llz {
        println!("alpha={}", s.alpha());
        println!("phrases={}", report.phrase_log.len());
    }
    println!("d_target={}", s.d());
    println!("d_bar={}", pt.d_bar);
    println!("total_bits={}", report.total_bits);
    println!("rate={:.6}", report.rate);
    println!("distortion={:.6}", report.achieved_distortion);
    println!("memory_symbols={}", report.memory_symbols);
    println!(
        "memory_bytes={}",
        bench::memory_bytes(report.memory_symbols, model.dist.repro_alphabet_size())
    );
    if let Some(p) = &a.reconstruction {
        inputs::write_symbols(p, report.reconstruction.symbols(), a.packed)?;
    }
    if let Some(p) = &a.output {
        Container::seal(&params, stream).write(p)?;
        println!("output={}", p.display());
    }
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let c = Container::read(&a.input)?;
    let params = c.params(a.limits.apply(Limits::default()), a.seed.map(Seed))?;
    let y = params.decode(&c.stream)?;
    println!("codec={}", c.codec);
    println!("n={}", y.len());
    println!("total_bits={}", c.stream.bit_length());
    println!("rate={:.6}", c.stream.bit_length() as f64 / y.len() as f64);
    if let Some(orig) = &a.original {
        let x = inputs::read_symbols(orig, a.original_packed, Some(y.len()))?;
        let x = SymbolBlock::new(x, c.model.source.alphabet_size())?;
        println!(
            "distortion={:.6}",
            c.model.average_distortion(x.symbols(), y.symbols())
        );
    }
    if let Some(p) = &a.output {
        inputs::write_symbols(p, y.symbols(), a.packed)?;
        println!("output={}", p.display());
    }
    Ok(())
}

fn cmd_params(a: ParamsArgs) -> Result<()> {
    let model = a.model.model()?;
    let dm = d_max(&model.source, &model.dist)?;
    if !(a.d > 0.0 && a.d < dm.value) {
        return Err(CoreError::DistortionOutOfRange {
            d: a.d,
            d_max: dm.value,
        }
        .into());
    }
    let pt = rate_distortion(&model.source, &model.dist, a.d, rd_tol(&model))?;
    println!("d={}", a.d);
    println!("d_max={}", dm.value);
    println!("rd={}", pt.rate);
    if let Some(codec) = a.codec {
        let args = CodecArgs {
            codec,
            d: a.d,
            gamma: if a.theorem2 { None } else { a.gamma },
            alpha: a.alpha,
            ell: a.ell,
            heuristic: false,
            seed: a.seed,
        };
        let p = args.params(&model, a.n, a.limits.apply(Limits::default()))?;
        print_codec(&p, &model);
    }
    if a.theorem2 {
        let (gamma, eps) = (
            a.gamma.expect("clap requires"),
            a.eps.expect("clap requires"),
        );
        let k = params::theorem2_constants(&model, a.d)?;
        println!("t2_d1={}", k.d1);
        println!("t2_k={}", k.k_const);
        println!("t2_c={}", k.c_const);
        println!("t2_gamma_hat={}", k.gamma_hat);
        println!("t2_eps_hat={}", k.eps_hat);
        let bl = params::theorem2_block_length(&model, a.d, gamma, eps)?;
        println!("t2_ell={}", bl.ell);
        println!("t2_pre_ceiling={}", bl.pre_ceiling);
        println!("t2_log2_size={}", bl.log2_size);
        if let Some(w) = &bl.warning {
            eprintln!("warning: {w}");
        }
    }
    if a.theorem3 {
        let (g, c) = (a.g.expect("clap requires"), a.c.expect("clap requires"));
        let s = params::theorem3_schedule(&model, a.d, g, c)?;
        println!("t3_ell={}", s.ell);
        println!("t3_gamma={}", s.gamma);
    }
    Ok(())
}

fn print_codec(p: &CodecParams, model: &Model) {
    let s = p.settings();
    let pt = p.point();
    println!("codec={}", p.codec());
    println!("n={}", s.n);
    println!("ell={}", s.ell);
    println!("gamma={}", s.gamma());
    println!("d_bar={}", pt.d_bar);
    println!("code_rate={}", pt.rate);
    match p {
        CodecParams::Gvw(g) => {
            println!("W={}", g.codewords);
            println!("B={}", g.index_bits);
            println!("k={}", g.blocks);
            println!("total_bits={}", g.total_bits());
            println!("rate={:.6}", g.rate());
        }
        CodecParams::Hyb(h) => {
            println!("W={}", h.codewords);
            println!("B={}", h.index_bits);
            println!("k={}", h.blocks);
            println!("m={}", h.db_len());
            println!("total_bits={}", h.total_bits());
            println!("rate={:.6}", h.rate());
        }
        CodecParams::Llz(l) => {
            println!("alpha={}", s.alpha());
            println!("m={}", l.db_len);
            println!("cap={}", l.cap);
            println!("length_bits={}", l.length_bits);
            println!("pointer_bits={}", l.pointer_bits);
        }
    }
    let sym = p.memory_symbols();
    println!("memory_symbols={sym}");
    println!(
        "memory_bytes={}",
        bench::memory_bytes(sym, model.dist.repro_alphabet_size())
    );
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    if a.seeds == 0 {
        bail!(Usage("--seeds must be positive".into()));
    }
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|i| a.seed_base + i).collect();
    let specs = match &a.scenario {
        Some(name) => {
            let mut specs = bench::builtin(name, &seeds)?;
            for s in &mut specs {
                s.limits = a.limits.apply(s.limits);
            }
            specs
        }
        None => custom_grid(&a, &seeds)?,
    };
    let mut records = Vec::new();
    for spec in &specs {
        eprintln!(
            "running {} ({} targets x {} seeds)",
            spec.name,
            spec.targets.len(),
            spec.seeds.len()
        );
        for r in bench::run_scenario(spec)? {
            eprintln!(
                "  {} D={} l={} d_ach={:.5} rate={:.5} mem={:.3}MB",
                r.codec,
                r.d_target,
                r.ell,
                r.d_achieved_mean,
                r.rate,
                r.memory_mb()
            );
            records.push(r);
        }
    }
    let out = open_out(a.csv.as_ref())?;
    bench::write_csv(&records, out)?;
    if let Some(p) = &a.plot {
        let model = &specs[0].model;
        let curve = rd::rd_curve(&model.source, &model.dist, a.curve_points, rd_tol(model))?;
        bench::emit_plot_data(&records, &curve, p)?;
    }
    if let Some(p) = &a.csv {
        println!("records={}", records.len());
        println!("csv={}", p.display());
    }
    if let Some(p) = &a.plot {
        println!("plot={}", p.display());
    }
    Ok(())
}

fn custom_grid(a: &BenchArgs, seeds: &[u64]) -> Result<Vec<ScenarioSpec>> {
    if a.codecs.is_empty() || a.targets.is_empty() {
        bail!(Usage(
            "custom grid needs at least one --codecs entry and one --targets entry \
             (or use --scenario)"
                .into()
        ));
    }
    let model = a.model.model()?;
    a.codecs
        .iter()
        .map(|&codec| {
            let mode = match a.ell {
                Some(ell) => {
                    let (g, al) = match codec {
                        CodecId::Llz => (LLZ_GAMMA, LLZ_ALPHA),
                        _ => (BLOCK_GAMMA, 0.0),
                    };
                    ParamMode::Explicit {
                        ell,
                        gamma: a.gamma.unwrap_or(g),
                        alpha: a.alpha.unwrap_or(al),
                    }
                }
                None => ParamMode::Heuristic,
            };
            let spec = ScenarioSpec {
                name: format!("custom-{codec}"),
                model: model.clone(),
                codec,
                targets: a.targets.clone(),
                n: a.n,
                seeds: seeds.to_vec(),
                mode,
                limits: a.limits.apply(Limits::default()),
                parallel: true,
            };
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}
