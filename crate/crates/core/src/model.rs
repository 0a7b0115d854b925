//! Source and distortion descriptions, plus the plain-text format used to
//! load them from disk.
//!
//! The text format is line oriented. Blank lines and anything after `#`
//! are ignored. A source file carries one `pmf` line; a distortion file
//! carries one `row` line per source letter:
//!
//! ```text
//! # Bern(0.4)
//! pmf 0.6 0.4
//!
//! # Hamming on {0,1}
//! repro_alphabet_size 2
//! row 0 1
//! row 1 0
//! ```
//!
//! Both kinds of line may also live in a single file.

use crate::error::{Error, Result};

/// Largest alphabet a symbol index can address.
pub const MAX_ALPHABET: usize = 256;

const PMF_SUM_TOL: f64 = 1e-12;

/// Memoryless source over `{0, .., alphabet_size - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pmf: Vec<f64>,
}

impl SourceModel {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() < 2 {
            return Err(Error::InvalidPmf(format!(
                "alphabet size {} < 2",
                pmf.len()
            )));
        }
        if pmf.len() > MAX_ALPHABET {
            return Err(Error::InvalidPmf(format!(
                "alphabet size {} > {MAX_ALPHABET}",
                pmf.len()
            )));
        }
        check_pmf(&pmf, PMF_SUM_TOL)?;
        Ok(Self { pmf })
    }

    /// Bernoulli(p): `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn alphabet_size(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.pmf.len() as f64;
        self.pmf.iter().all(|&p| (p - u).abs() <= 1e-12)
    }
}

/// Single-letter distortion measure `rho(x, y)` stored row-major with one
/// row per source letter.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionSpec {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
}

impl DistortionSpec {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::InvalidDistortion("no rows".into()));
        }
        let cols = rows[0].len();
        if cols == 0 || cols > MAX_ALPHABET {
            return Err(Error::InvalidDistortion(format!(
                "reproduction alphabet size {cols} not in 1..={MAX_ALPHABET}"
            )));
        }
        if n_rows > MAX_ALPHABET {
            return Err(Error::InvalidDistortion(format!(
                "source alphabet size {n_rows} > {MAX_ALPHABET}"
            )));
        }
        let mut matrix = Vec::with_capacity(n_rows * cols);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidDistortion(format!(
                    "row {x} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistortion(format!(
                        "row {x} has entry {v}; entries must be finite and >= 0"
                    )));
                }
            }
            if !row.contains(&0.0) {
                return Err(Error::InvalidDistortion(format!(
                    "row {x} has no zero-distortion reproduction letter"
                )));
            }
            matrix.extend_from_slice(row);
        }
        Ok(Self {
            rows: n_rows,
            cols,
            matrix,
        })
    }

    pub fn hamming(k: usize) -> Result<Self> {
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::new(rows)
    }

    pub fn source_alphabet_size(&self) -> usize {
        self.rows
    }

    pub fn repro_alphabet_size(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.cols..(x + 1) * self.cols]
    }

    pub fn max_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_hamming(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|x| (0..self.cols).all(|y| self.get(x, y) == if x == y { 0.0 } else { 1.0 }))
    }

    /// Every entry is a nonnegative integer small enough for exact `u32` sums.
    pub fn is_integer_valued(&self) -> bool {
        self.matrix
            .iter()
            .all(|&v| v.fract() == 0.0 && v <= u16::MAX as f64)
    }

    /// Zero-distortion map: smallest `y` with `rho(x, y) = 0`.
    pub fn zero_map(&self, x: usize) -> usize {
        self.row(x)
            .iter()
            .position(|&v| v == 0.0)
            .expect("validated: every row has a zero entry")
    }

    pub(crate) fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    /// Checks that `source` indexes the rows of this matrix.
    pub fn check_source(&self, source: &SourceModel) -> Result<()> {
        if source.alphabet_size() != self.rows {
            return Err(Error::InvalidDistortion(format!(
                "matrix has {} rows but source alphabet has {} letters",
                self.rows,
                source.alphabet_size()
            )));
        }
        Ok(())
    }
}

/// A source together with the distortion measure it is coded under.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub source: SourceModel,
    pub dist: DistortionSpec,
}

impl Model {
    pub fn new(source: SourceModel, dist: DistortionSpec) -> Result<Self> {
        dist.check_source(&source)?;
        Ok(Self { source, dist })
    }

    pub fn bernoulli_hamming(p: f64) -> Result<Self> {
        Self::new(SourceModel::bernoulli(p)?, DistortionSpec::hamming(2)?)
    }

    pub fn uniform_hamming(k: usize) -> Result<Self> {
        Self::new(SourceModel::uniform(k)?, DistortionSpec::hamming(k)?)
    }

    /// Average distortion between two equal-length strings.
    pub fn average_distortion(&self, x: &[u8], y: &[u8]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        if x.is_empty() {
            return 0.0;
        }
        let sum: f64 = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| self.dist.get(a as usize, b as usize))
            .sum();
        sum / x.len() as f64
    }
}

/// Validates a probability vector: finite, nonnegative, summing to one
/// within `tol`.
pub fn check_pmf(pmf: &[f64], tol: f64) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidPmf("empty".into()));
    }
    if let Some(p) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidPmf(format!("entry {p} is not a probability")));
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
    }
    Ok(())
}

fn parse_reals(line_no: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line_no}: bad number {f:?}")))
        })
        .collect()
}

fn parse_count(line_no: usize, fields: &[&str]) -> Result<usize> {
    match fields {
        [v] => v
            .parse()
            .map_err(|_| Error::Parse(format!("line {line_no}: bad integer {v:?}"))),
        _ => Err(Error::Parse(format!(
            "line {line_no}: expected one integer"
        ))),
    }
}

/// Parsed contents of a model file. Either half may be absent.
#[derive(Debug, Default, Clone)]
pub struct ModelFile {
    pub alphabet_size: Option<usize>,
    pub pmf: Option<Vec<f64>>,
    pub repro_alphabet_size: Option<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ModelFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or_default();
            let fields: Vec<&str> = it.collect();
            match key {
                "alphabet_size" => out.alphabet_size = Some(parse_count(line_no, &fields)?),
                "repro_alphabet_size" => {
                    out.repro_alphabet_size = Some(parse_count(line_no, &fields)?)
                }
                "pmf" => {
                    if out.pmf.is_some() {
                        return Err(Error::Parse(format!("line {line_no}: duplicate pmf")));
                    }
                    out.pmf = Some(parse_reals(line_no, &fields)?);
                }
                "row" => out.rows.push(parse_reals(line_no, &fields)?),
                other => {
                    return Err(Error::Parse(format!(
                        "line {line_no}: unknown key {other:?}"
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn source(&self) -> Result<SourceModel> {
        let pmf = self
            .pmf
            .clone()
            .ok_or_else(|| Error::Parse("no pmf line".into()))?;
        if let Some(k) = self.alphabet_size {
            if k != pmf.len() {
                return Err(Error::Parse(format!(
                    "alphabet_size {k} disagrees with pmf of {} entries",
                    pmf.len()
                )));
            }
        }
        SourceModel::new(pmf)
    }

    pub fn distortion(&self) -> Result<DistortionSpec> {
        if self.rows.is_empty() {
            return Err(Error::Parse("no row lines".into()));
        }
        if let Some(k) = self.repro_alphabet_size {
            if self.rows.iter().any(|r| r.len() != k) {
                return Err(Error::Parse(format!(
                    "rows disagree with repro_alphabet_size {k}"
                )));
            }
        }
        DistortionSpec::new(self.rows.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_pmfs() {
        assert!(SourceModel::new(vec![1.0]).is_err());
        assert!(SourceModel::new(vec![0.5, 0.6]).is_err());
        assert!(SourceModel::new(vec![-0.1, 1.1]).is_err());
        assert!(SourceModel::bernoulli(0.4).is_ok());
    }

    #[test]
    fn rejects_rows_without_zero() {
        let err = DistortionSpec::new(vec![vec![0.0, 1.0], vec![1.0, 0.5]]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistortion(_)));
        assert!(DistortionSpec::new(vec![vec![0.0, -1.0]]).is_err());
    }

    #[test]
    fn hamming_shape() {
        let d = DistortionSpec::hamming(4).unwrap();
        assert!(d.is_hamming());
        assert!(d.is_integer_valued());
        assert_eq!(d.zero_map(2), 2);
        let skew = DistortionSpec::new(vec![vec![0.0, 2.0, 0.0], vec![0.5, 0.0, 1.0]]).unwrap();
        assert!(!skew.is_hamming());
        assert!(!skew.is_integer_valued());
        assert_eq!(skew.zero_map(0), 0);
        assert_eq!(skew.zero_map(1), 1);
    }

    #[test]
    fn parses_model_file() {
        let text = "# test\npmf 0.6 0.4\nrepro_alphabet_size 2\nrow 0 1   # first\nrow 1 0\n";
        let f = ModelFile::parse(text).unwrap();
        assert_eq!(f.source().unwrap(), SourceModel::bernoulli(0.4).unwrap());
        assert!(f.distortion().unwrap().is_hamming());
        assert!(ModelFile::parse("pmf 0.5 x").is_err());
        assert!(ModelFile::parse("weights 1 2").is_err());
        assert!(ModelFile::parse("alphabet_size 3\npmf 0.5 0.5")
            .unwrap()
            .source()
            .is_err());
    }
}
