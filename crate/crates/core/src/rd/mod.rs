//! Rate-distortion function of a finite memoryless source.
//!
//! Closed forms are used for a binary source under binary Hamming
//! distortion and for a uniform source under symmetric Hamming distortion;
//! everything else goes through Blahut-Arimoto. All quantities are in
//! bits.

pub mod blahut;
pub mod entropy;

use crate::error::{Error, Result};
use crate::model::{DistortionSpec, SourceModel};
use entropy::binary_entropy;

/// Default tolerance for closed-form evaluations.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Default tolerance for Blahut-Arimoto evaluations.
pub const BA_TOL: f64 = 1e-7;

/// One point on the rate-distortion curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub distortion: f64,
    /// `R(D)` in bits per symbol.
    pub rate: f64,
    /// `R'(D)` in bits per unit of distortion.
    pub slope: f64,
    /// Optimal reproduction distribution at this distortion.
    pub q_star: Vec<f64>,
}

/// Samples of `R(D)` with strictly increasing distortion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RdCurve {
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    /// Rates are nonincreasing and the discrete second differences of the
    /// (uniformly or non-uniformly spaced) samples are >= `-slack`.
    pub fn is_monotone_convex(&self, slack: f64) -> bool {
        let p = &self.points;
        let monotone = p
            .windows(2)
            .all(|w| w[1].distortion > w[0].distortion && w[1].rate <= w[0].rate + slack);
        let convex = p.windows(3).all(|w| {
            let s1 = (w[1].rate - w[0].rate) / (w[1].distortion - w[0].distortion);
            let s2 = (w[2].rate - w[1].rate) / (w[2].distortion - w[1].distortion);
            s2 - s1 >= -slack
        });
        monotone && convex
    }
}

/// Minimum expected distortion of a constant reproduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DMax {
    pub value: f64,
    /// Smallest reproduction letter achieving `value`.
    pub letter: usize,
}

impl DMax {
    /// `R(D)` vanishes identically when `Dmax = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.value <= 0.0
    }
}

pub fn d_max(source: &SourceModel, dist: &DistortionSpec) -> Result<DMax> {
    dist.check_source(source)?;
    let p = source.pmf();
    let mut best = DMax {
        value: f64::INFINITY,
        letter: 0,
    };
    for y in 0..dist.repro_alphabet_size() {
        let e: f64 = p
            .iter()
            .enumerate()
            .map(|(x, px)| px * dist.get(x, y))
            .sum();
        if e < best.value {
            best = DMax {
                value: e,
                letter: y,
            };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Method {
    /// `h(p) - h(D)`, carrying `p = P(1)`.
    Binary(f64),
    /// `log2 k - h(D) - D log2(k-1)`.
    Uniform(usize),
    BlahutArimoto,
}

fn method(source: &SourceModel, dist: &DistortionSpec) -> Method {
    if !dist.is_hamming() {
        return Method::BlahutArimoto;
    }
    let k = source.alphabet_size();
    if k == 2 {
        Method::Binary(source.pmf()[1])
    } else if source.is_uniform() {
        Method::Uniform(k)
    } else {
        Method::BlahutArimoto
    }
}

fn check_interior(d: f64, d_max: f64) -> Result<()> {
    if !(d > 0.0 && d < d_max) {
        return Err(Error::DistortionOutOfRange { d, d_max });
    }
    Ok(())
}

/// `R(D)` for `0 < D < Dmax`, with slope and optimal reproduction pmf.
pub fn rate_distortion(
    source: &SourceModel,
    dist: &DistortionSpec,
    d: f64,
    tol: f64,
) -> Result<RdPoint> {
    let dm = d_max(source, dist)?;
    check_interior(d, dm.value)?;
    Ok(match method(source, dist) {
        Method::Binary(p) => RdPoint {
            distortion: d,
            rate: (binary_entropy(p) - binary_entropy(d)).max(0.0),
            slope: (d / (1.0 - d)).log2(),
            q_star: {
                let q1 = (p - d) / (1.0 - 2.0 * d);
                vec![1.0 - q1, q1]
            },
        },
        Method::Uniform(k) => {
            let kf = k as f64;
            RdPoint {
                distortion: d,
                rate: (kf.log2() - binary_entropy(d) - d * (kf - 1.0).log2()).max(0.0),
                slope: (d / ((1.0 - d) * (kf - 1.0))).log2(),
                q_star: vec![1.0 / kf; k],
            }
        }
        Method::BlahutArimoto => {
            let sol = blahut::solve_for_distortion(source, dist, d, tol)?;
            RdPoint {
                distortion: d,
                rate: sol.rate,
                slope: sol.slope_bits(),
                q_star: sol.q,
            }
        }
    })
}

/// `R'(D)` in bits per unit of distortion.
pub fn rd_slope(source: &SourceModel, dist: &DistortionSpec, d: f64) -> Result<f64> {
    rate_distortion(source, dist, d, BA_TOL).map(|pt| pt.slope)
}

/// Rate at vanishing distortion, `R(0+)`.
pub fn rate_at_zero(source: &SourceModel, dist: &DistortionSpec) -> Result<f64> {
    Ok(match method(source, dist) {
        Method::Binary(p) => binary_entropy(p),
        Method::Uniform(k) => (k as f64).log2(),
        Method::BlahutArimoto => {
            let min_pos = dist
                .matrix()
                .iter()
                .copied()
                .filter(|&v| v > 0.0)
                .fold(f64::INFINITY, f64::min);
            let s = -60.0 / min_pos;
            blahut::solve_at_slope(source, dist, s, BA_TOL)?.rate
        }
    })
}

/// `D(R)`: the distortion at which `R(D) = rate`.
///
/// Rates at or above `R(0+)` (but below `log2 |A|`) map to zero distortion.
pub fn distortion_rate(
    source: &SourceModel,
    dist: &DistortionSpec,
    rate: f64,
    tol: f64,
) -> Result<f64> {
    let r_max = (source.alphabet_size() as f64).log2();
    if !(rate > 0.0 && rate < r_max) {
        return Err(Error::RateOutOfRange { r: rate, r_max });
    }
    let dm = d_max(source, dist)?;
    if dm.is_degenerate() {
        return Err(Error::DistortionOutOfRange {
            d: 0.0,
            d_max: dm.value,
        });
    }
    if rate >= rate_at_zero(source, dist)? {
        return Ok(0.0);
    }
    match method(source, dist) {
        Method::BlahutArimoto => {
            let sol = blahut::solve_for_rate(source, dist, rate, tol.min(BA_TOL))?;
            Ok(sol.distortion.clamp(0.0, dm.value))
        }
        _ => {
            // R is strictly decreasing on (0, Dmax): plain bisection until
            // the bracket stops shrinking.
            let (mut lo, mut hi) = (0.0_f64, dm.value);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if rate_distortion(source, dist, mid, tol)?.rate > rate {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// `points` samples of `R(D)` on a uniform interior grid of `(0, Dmax)`.
pub fn rd_curve(
    source: &SourceModel,
    dist: &DistortionSpec,
    points: usize,
    tol: f64,
) -> Result<RdCurve> {
    let dm = d_max(source, dist)?;
    if dm.is_degenerate() {
        return Err(Error::DistortionOutOfRange {
            d: 0.0,
            d_max: dm.value,
        });
    }
    let points = (1..=points)
        .map(|i| {
            let d = dm.value * i as f64 / (points + 1) as f64;
            rate_distortion(source, dist, d, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve { points })
}
