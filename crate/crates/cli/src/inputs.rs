//! Source / distortion descriptors and symbol files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rdlz_core::model::ModelFile;
use rdlz_core::{DistortionSpec, Model, SourceModel};

use crate::Usage;

/// `bern:p`, `uniform:k`, or a model file carrying a `pmf` line.
pub fn parse_source(desc: &str) -> Result<SourceModel> {
    if let Some(p) = desc.strip_prefix("bern:") {
        let p: f64 = p
            .parse()
            .map_err(|_| Usage(format!("bad Bernoulli parameter in {desc:?}")))?;
        return Ok(SourceModel::bernoulli(p)?);
    }
    if let Some(k) = desc.strip_prefix("uniform:") {
        let k: usize = k
            .parse()
            .map_err(|_| Usage(format!("bad alphabet size in {desc:?}")))?;
        return Ok(SourceModel::uniform(k)?);
    }
    let text = fs::read_to_string(desc).with_context(|| format!("reading source file {desc}"))?;
    Ok(ModelFile::parse(&text)?.source()?)
}

/// `hamming`, or a model file carrying `row` lines.
pub fn parse_distortion(desc: &str, source: &SourceModel) -> Result<DistortionSpec> {
    if desc == "hamming" {
        return Ok(DistortionSpec::hamming(source.alphabet_size())?);
    }
    let text =
        fs::read_to_string(desc).with_context(|| format!("reading distortion file {desc}"))?;
    Ok(ModelFile::parse(&text)?.distortion()?)
}

pub fn parse_model(source: &str, dist: &str) -> Result<Model> {
    let s = parse_source(source)?;
    let d = parse_distortion(dist, &s)?;
    Ok(Model::new(s, d)?)
}

/// Reads symbols: one integer per line, or (packed) eight binary symbols
/// per byte, most significant bit first, truncated to `n` when given.
pub fn read_symbols(path: &Path, packed: bool, n: Option<usize>) -> Result<Vec<u8>> {
    if packed {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let total = bytes.len() * 8;
        let n = n.unwrap_or(total);
        if n > total {
            bail!(Usage(format!(
                "--n {n} exceeds the {total} symbols in {}",
                path.display()
            )));
        }
        return Ok((0..n).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: u8 = t
            .parse()
            .map_err(|_| Usage(format!("{}:{}: bad symbol {t:?}", path.display(), i + 1)))?;
        out.push(v);
    }
    if let Some(n) = n {
        if n != out.len() {
            bail!(Usage(format!(
                "--n {n} but {} holds {} symbols",
                path.display(),
                out.len()
            )));
        }
    }
    Ok(out)
}

pub fn write_symbols(path: &Path, symbols: &[u8], packed: bool) -> Result<()> {
    let data = if packed {
        if let Some(&s) = symbols.iter().find(|&&s| s > 1) {
            bail!(Usage(format!(
                "packed output needs binary symbols, found {s}"
            )));
        }
        let mut bytes = vec![0u8; symbols.len().div_ceil(8)];
        for (i, &s) in symbols.iter().enumerate() {
            bytes[i / 8] |= s << (7 - i % 8);
        }
        bytes
    } else {
        let mut text = String::with_capacity(symbols.len() * 2);
        for s in symbols {
            text.push_str(&s.to_string());
            text.push('\n');
        }
        text.into_bytes()
    };
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))
}
