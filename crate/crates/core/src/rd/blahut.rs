//! Blahut-Arimoto iteration for the rate-distortion function of a finite
//! memoryless source.
//!
//! The iteration is parametrised by a slope `s < 0` (nats per unit of
//! distortion). For fixed `s` the reproduction marginal is refined until
//! the classical lower and upper bounds on `R(D_s)` agree within the
//! requested tolerance. Hitting a prescribed distortion or rate is done by
//! bisection over `s`.

use std::f64::consts::LN_2;

use super::entropy::mutual_information;
use crate::error::{Error, Result};
use crate::model::{DistortionSpec, SourceModel};

pub const MAX_ITERATIONS: usize = 100_000;
const MAX_BISECTIONS: usize = 200;
const TARGET_TOL: f64 = 1e-13;

/// Converged state at one slope.
#[derive(Debug, Clone)]
pub struct SlopeSolution {
    pub slope_nats: f64,
    /// Expected distortion of `channel`.
    pub distortion: f64,
    /// Mutual information of `channel` in bits.
    pub rate: f64,
    pub q: Vec<f64>,
    /// Row-major `W(y | x)`.
    pub channel: Vec<f64>,
    pub iterations: usize,
}

impl SlopeSolution {
    pub fn slope_bits(&self) -> f64 {
        self.slope_nats / LN_2
    }
}

/// Runs the iteration at slope `s` from the uniform marginal.
pub fn solve_at_slope(
    source: &SourceModel,
    dist: &DistortionSpec,
    s: f64,
    tol_bits: f64,
) -> Result<SlopeSolution> {
    let p = source.pmf();
    let nx = p.len();
    let ny = dist.repro_alphabet_size();
    let weights: Vec<f64> = dist.matrix().iter().map(|&r| (s * r).exp()).collect();
    let tol_nats = tol_bits * LN_2;

    let mut q = vec![1.0 / ny as f64; ny];
    let mut z = vec![0.0; nx];
    let mut c = vec![0.0; ny];
    let mut iterations = 0;
    loop {
        iterations += 1;
        for x in 0..nx {
            let row = &weights[x * ny..(x + 1) * ny];
            z[x] = row.iter().zip(&q).map(|(a, qy)| a * qy).sum();
        }
        c.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..nx {
            if p[x] == 0.0 {
                continue;
            }
            let f = p[x] / z[x];
            for y in 0..ny {
                c[y] += f * weights[x * ny + y];
            }
        }
        let mut max_log = f64::NEG_INFINITY;
        let mut avg_log = 0.0;
        for y in 0..ny {
            if q[y] > 0.0 {
                let lc = c[y].ln();
                max_log = max_log.max(lc);
                avg_log += q[y] * c[y] * lc;
            }
        }
        for y in 0..ny {
            q[y] *= c[y];
        }
        let norm: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= norm);

        let gap = max_log - avg_log;
        if gap <= tol_nats {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                gap: gap / LN_2,
            });
        }
    }

    let mut channel = vec![0.0; nx * ny];
    let mut distortion = 0.0;
    for x in 0..nx {
        let row = &weights[x * ny..(x + 1) * ny];
        let zx: f64 = row.iter().zip(&q).map(|(a, qy)| a * qy).sum();
        for y in 0..ny {
            let w = q[y] * row[y] / zx;
            channel[x * ny + y] = w;
            distortion += p[x] * w * dist.get(x, y);
        }
    }
    let rate = mutual_information(p, &channel, ny);
    Ok(SlopeSolution {
        slope_nats: s,
        distortion,
        rate,
        q,
        channel,
        iterations,
    })
}

/// Finds the slope whose solution has distortion `target`, then returns it
/// with `rate` first-order corrected to exactly `target`.
pub fn solve_for_distortion(
    source: &SourceModel,
    dist: &DistortionSpec,
    target: f64,
    tol_bits: f64,
) -> Result<SlopeSolution> {
    bisect_slope(source, dist, tol_bits, |sol| sol.distortion - target).map(|mut sol| {
        sol.rate = (sol.rate + sol.slope_bits() * (target - sol.distortion)).max(0.0);
        sol.distortion = target;
        sol
    })
}

/// Finds the slope whose solution has mutual information `target` bits;
/// `distortion` is corrected to first order.
pub fn solve_for_rate(
    source: &SourceModel,
    dist: &DistortionSpec,
    target: f64,
    tol_bits: f64,
) -> Result<SlopeSolution> {
    bisect_slope(source, dist, tol_bits, |sol| target - sol.rate).map(|mut sol| {
        let sb = sol.slope_bits();
        if sb != 0.0 {
            sol.distortion += (target - sol.rate) / sb;
        }
        sol.rate = target;
        sol
    })
}

/// Bisection over the slope for a residual that increases with `s`.
fn bisect_slope<F>(
    source: &SourceModel,
    dist: &DistortionSpec,
    tol_bits: f64,
    residual: F,
) -> Result<SlopeSolution>
where
    F: Fn(&SlopeSolution) -> f64,
{
    let solve = |s: f64| solve_at_slope(source, dist, s, tol_bits);

    let mut lo = -1.0;
    let mut lo_sol = solve(lo)?;
    let mut hi;
    let mut hi_sol;
    if residual(&lo_sol) > 0.0 {
        hi = lo;
        hi_sol = lo_sol;
        loop {
            lo *= 2.0;
            lo_sol = solve(lo)?;
            if residual(&lo_sol) <= 0.0 {
                break;
            }
            if lo < -1e6 {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    gap: residual(&lo_sol),
                });
            }
        }
    } else {
        hi = lo;
        loop {
            hi /= 2.0;
            hi_sol = solve(hi)?;
            if residual(&hi_sol) >= 0.0 {
                break;
            }
            if hi > -1e-12 {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    gap: residual(&hi_sol),
                });
            }
            lo = hi;
            lo_sol = hi_sol;
        }
    }

    for _ in 0..MAX_BISECTIONS {
        if residual(&lo_sol).abs() <= TARGET_TOL {
            return Ok(lo_sol);
        }
        if residual(&hi_sol).abs() <= TARGET_TOL {
            return Ok(hi_sol);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let mid_sol = solve(mid)?;
        if residual(&mid_sol) <= 0.0 {
            lo = mid;
            lo_sol = mid_sol;
        } else {
            hi = mid;
            hi_sol = mid_sol;
        }
    }
    Ok(if residual(&lo_sol).abs() <= residual(&hi_sol).abs() {
        lo_sol
    } else {
        hi_sol
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_is_a_pmf() {
        let src = SourceModel::bernoulli(0.3).unwrap();
        let d = DistortionSpec::hamming(2).unwrap();
        let sol = solve_at_slope(&src, &d, -3.0, 1e-10).unwrap();
        assert!((sol.q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sol.rate > 0.0 && sol.distortion > 0.0);
        for x in 0..2 {
            let row: f64 = sol.channel[x * 2..x * 2 + 2].iter().sum();
            assert!((row - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steeper_slope_means_lower_distortion() {
        let src = SourceModel::bernoulli(0.4).unwrap();
        let d = DistortionSpec::hamming(2).unwrap();
        let a = solve_at_slope(&src, &d, -2.0, 1e-10).unwrap();
        let b = solve_at_slope(&src, &d, -4.0, 1e-10).unwrap();
        assert!(b.distortion < a.distortion);
        assert!(b.rate > a.rate);
    }
}
