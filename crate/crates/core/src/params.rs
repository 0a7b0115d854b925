//! Parameter selection: the experimental defaults, the finite-block
//! constants of the single-block distortion bound, and the near-linear
//! block-length schedule.

use crate::codec::{CodecId, CodecParams, Limits, Settings};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::rd::{self, d_max, rate_distortion, rd_slope};
use crate::source::Seed;

/// Block lengths are chosen so that `l * rate` is about this many bits.
pub const TARGET_LOG2_SIZE: f64 = 22.0;
pub const BLOCK_GAMMA: f64 = 0.002;
pub const LLZ_GAMMA: f64 = 0.03;
pub const LLZ_ALPHA: f64 = 0.1;

/// Experimental defaults for `codec` at target `d`:
/// GVW/HYB use `l = ceil(22 / (R(D) + 0.002))`, `gamma = 0.002`;
/// LLZ uses `l = ceil(22 / R(D))`, `gamma = 0.03`, `alpha = 0.1`.
pub fn heuristic_settings(
    model: &Model,
    d: f64,
    codec: CodecId,
    n: usize,
    seed: Seed,
) -> Result<Settings> {
    let dm = d_max(&model.source, &model.dist)?;
    if !(d > 0.0 && d < dm.value) {
        return Err(Error::DistortionOutOfRange { d, d_max: dm.value });
    }
    // Work from the micro-unit value the codec will see.
    let probe = Settings::new(n, 1, d, BLOCK_GAMMA, seed)?;
    let rd = rate_distortion(&model.source, &model.dist, probe.d(), rd::CLOSED_FORM_TOL)?.rate;
    Ok(match codec {
        CodecId::Gvw | CodecId::Hyb => {
            let ell = (TARGET_LOG2_SIZE / (rd + BLOCK_GAMMA)).ceil() as usize;
            Settings::new(n, ell, d, BLOCK_GAMMA, seed)?
        }
        CodecId::Llz => {
            let ell = (TARGET_LOG2_SIZE / rd).ceil() as usize;
            Settings::new(n, ell, d, LLZ_GAMMA, seed)?.with_alpha(LLZ_ALPHA)?
        }
    })
}

pub fn heuristic_params(
    model: &Model,
    d: f64,
    codec: CodecId,
    n: usize,
    seed: Seed,
    limits: Limits,
) -> Result<CodecParams> {
    CodecParams::new(
        codec,
        model,
        heuristic_settings(model, d, codec, n, seed)?,
        limits,
    )
}

/// Constants entering the single-block expected-distortion bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Constants {
    pub d: f64,
    pub d_max: f64,
    /// `D1 = D / 2`.
    pub d1: f64,
    /// `K(D) = (D - D1) / (R(D1) - R(D))`.
    pub k_const: f64,
    /// `C(D) = min{K^2 / (8 Dmax^2), 1 / (32 (R'(D/2) Dmax)^2), 1/4}`.
    pub c_const: f64,
    /// `min{1, 2 (R(D/2) - R(D))}`.
    pub gamma_hat: f64,
    /// `min{exp(16 C) / (3 (Dmax - D)), 3 e^-1 (Dmax - D)}`.
    pub eps_hat: f64,
}

/// Natural exponential, as written in the definition of `eps_hat`.
fn eps_hat_exp(x: f64) -> f64 {
    x.exp()
}

/// Logarithm of the block-length formula: base 2, like every other rate.
fn block_length_log(x: f64) -> f64 {
    x.log2()
}

pub fn theorem2_constants(model: &Model, d: f64) -> Result<Theorem2Constants> {
    let (s, dist) = (&model.source, &model.dist);
    let dm = d_max(s, dist)?.value;
    theorem2_constants_from(
        d,
        dm,
        |x| rate_distortion(s, dist, x, rd::CLOSED_FORM_TOL).map(|p| p.rate),
        |x| rd_slope(s, dist, x),
    )
}

/// Same as [`theorem2_constants`] with caller-supplied `R` and `R'`.
pub fn theorem2_constants_from(
    d: f64,
    d_max: f64,
    rate: impl Fn(f64) -> Result<f64>,
    slope: impl Fn(f64) -> Result<f64>,
) -> Result<Theorem2Constants> {
    if !(d > 0.0 && d < d_max) {
        return Err(Error::DistortionOutOfRange { d, d_max });
    }
    let d1 = d / 2.0;
    let r_d = rate(d)?;
    let r_d1 = rate(d1)?;
    let drop = r_d1 - r_d;
    if drop.is_nan() || drop <= 0.0 {
        return Err(Error::DegenerateConstants(format!(
            "R(D/2) - R(D) = {drop} is not positive"
        )));
    }
    let k_const = (d - d1) / drop;
    let s = slope(d1)?;
    let c_const = (k_const * k_const / (8.0 * d_max * d_max))
        .min(1.0 / (32.0 * (s * d_max).powi(2)))
        .min(0.25);
    let gamma_hat = (2.0 * drop).min(1.0);
    let gap = d_max - d;
    let eps_hat = (eps_hat_exp(16.0 * c_const) / (3.0 * gap)).min(3.0 * gap / eps_hat_exp(1.0));
    let out = Theorem2Constants {
        d,
        d_max,
        d1,
        k_const,
        c_const,
        gamma_hat,
        eps_hat,
    };
    if ![k_const, c_const, gamma_hat, eps_hat]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    {
        return Err(Error::DegenerateConstants(format!("{out:?}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockLength {
    pub ell: u64,
    /// Value inside the ceiling.
    pub pre_ceiling: f64,
    /// `l * (R(D) + gamma)`.
    pub log2_size: f64,
    /// Set when `log2_size` exceeds the codec memory guard.
    pub warning: Option<String>,
}

/// `l = ceil(log2(3 (Dmax - D) / eps) / (C(D) gamma^2))`.
pub fn theorem2_block_length(model: &Model, d: f64, gamma: f64, eps: f64) -> Result<BlockLength> {
    let c = theorem2_constants(model, d)?;
    let rd = rate_distortion(&model.source, &model.dist, d, rd::CLOSED_FORM_TOL)?.rate;
    block_length_from(&c, rd, gamma, eps, Limits::default().max_log2_size)
}

pub fn block_length_from(
    c: &Theorem2Constants,
    rd: f64,
    gamma: f64,
    eps: f64,
    guard: f64,
) -> Result<BlockLength> {
    if !(gamma > 0.0 && gamma < c.gamma_hat) {
        return Err(Error::GammaOutOfRange {
            gamma,
            gamma_hat: c.gamma_hat,
        });
    }
    if !(eps > 0.0 && eps < c.eps_hat) {
        return Err(Error::EpsilonOutOfRange {
            eps,
            eps_hat: c.eps_hat,
        });
    }
    let pre = block_length_log(3.0 * (c.d_max - c.d) / eps) / (c.c_const * gamma * gamma);
    if !(pre.is_finite() && pre < 1.8e19) {
        return Err(Error::DegenerateConstants(format!(
            "block length {pre} does not fit 64 bits"
        )));
    }
    let ell = (pre.ceil() as u64).max(1);
    let log2_size = ell as f64 * (rd + gamma);
    let warning = (log2_size > guard)
        .then(|| format!("l*R = {log2_size:.3e} exceeds the memory guard {guard}; not runnable"));
    Ok(BlockLength {
        ell,
        pre_ceiling: pre,
        log2_size,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub ell: u64,
    pub gamma: f64,
}

/// `l(n) = ceil(log2 g / (R(D) + c))`, `gamma(n) = sqrt(log2 l / l)`.
pub fn theorem3_schedule(model: &Model, d: f64, g: f64, c: f64) -> Result<Schedule> {
    let rd = rate_distortion(&model.source, &model.dist, d, rd::CLOSED_FORM_TOL)?.rate;
    schedule_from(rd, g, c)
}

pub fn schedule_from(rd: f64, g: f64, c: f64) -> Result<Schedule> {
    if !(g > 1.0 && g.is_finite()) {
        return Err(Error::InvalidSchedule(format!("g(n) = {g} must exceed 1")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidSchedule(format!("c = {c} must be positive")));
    }
    let ell = (g.log2() / (rd + c)).ceil().max(1.0) as u64;
    let lf = ell as f64;
    Ok(Schedule {
        ell,
        gamma: (lf.log2() / lf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::entropy::binary_entropy;

    fn bern04() -> Model {
        Model::bernoulli_hamming(0.4).unwrap()
    }

    #[test]
    fn heuristic_block_lengths() {
        let m = bern04();
        let s = heuristic_settings(&m, 0.05, CodecId::Gvw, 1050, Seed(0)).unwrap();
        assert_eq!((s.ell, s.gamma_micros), (33, 2000));
        let s = heuristic_settings(&m, 0.05, CodecId::Llz, 1050, Seed(0)).unwrap();
        assert_eq!(
            (s.ell, s.gamma_micros, s.alpha_micros),
            (33, 30_000, 100_000)
        );
        let s = heuristic_settings(&m, 0.29, CodecId::Hyb, 1050, Seed(0)).unwrap();
        // 22 / (h(0.4) - h(0.29) + 0.002) = 211.2
        assert_eq!(s.ell, 212);
        assert!(matches!(
            heuristic_settings(&m, 0.4, CodecId::Gvw, 1050, Seed(0)),
            Err(Error::DistortionOutOfRange { .. })
        ));
    }

    #[test]
    fn constants_by_hand() {
        let m = bern04();
        let c = theorem2_constants(&m, 0.2).unwrap();
        let r = |d: f64| binary_entropy(0.4) - binary_entropy(d);
        let k = 0.1 / (r(0.1) - r(0.2));
        let slope = (0.1f64 / 0.9).log2();
        let cc = (k * k / (8.0 * 0.16))
            .min(1.0 / (32.0 * (slope * 0.4).powi(2)))
            .min(0.25);
        assert!((c.k_const - k).abs() < 1e-12);
        assert!((c.c_const - cc).abs() < 1e-12);
        assert!((c.gamma_hat - (2.0 * (r(0.1) - r(0.2))).min(1.0)).abs() < 1e-12);
        let eps = ((16.0 * cc).exp() / (3.0 * 0.2)).min(3.0 * 0.2 / std::f64::consts::E);
        assert!((c.eps_hat - eps).abs() < 1e-12);
        assert!(c.c_const <= 0.25 && c.gamma_hat <= 1.0);
    }

    #[test]
    fn block_length_scaling() {
        let m = bern04();
        let c = theorem2_constants(&m, 0.2).unwrap();
        let rd = binary_entropy(0.4) - binary_entropy(0.2);
        let g = 0.5 * c.gamma_hat;
        let a = block_length_from(&c, rd, g, 0.5 * c.eps_hat, 28.0).unwrap();
        let b = block_length_from(&c, rd, g / 2.0, 0.5 * c.eps_hat, 28.0).unwrap();
        assert!((b.pre_ceiling / a.pre_ceiling - 4.0).abs() < 1e-12);
        let expect = (3.0 * 0.2 / (0.5 * c.eps_hat)).log2() / (c.c_const * g * g);
        assert_eq!(a.ell, expect.ceil() as u64);
        let mut last = u64::MAX;
        for f in [0.1, 0.3, 0.6, 0.9, 0.999] {
            let l = block_length_from(&c, rd, g, f * c.eps_hat, 28.0)
                .unwrap()
                .ell;
            assert!(l <= last);
            last = l;
        }
        assert!(matches!(
            block_length_from(&c, rd, c.gamma_hat, 0.5 * c.eps_hat, 28.0),
            Err(Error::GammaOutOfRange { .. })
        ));
        assert!(matches!(
            block_length_from(&c, rd, g, c.eps_hat, 28.0),
            Err(Error::EpsilonOutOfRange { .. })
        ));
    }

    #[test]
    fn schedule_examples() {
        let s = schedule_from(0.4, 1024.0, 0.6).unwrap();
        assert_eq!(s.ell, 10);
        assert!((s.gamma - (10f64.log2() / 10.0).sqrt()).abs() < 1e-15);
        let mut last = 0;
        for g in [2.0, 16.0, 1e3, 1e6, 1e12] {
            let s = schedule_from(0.4, g, 0.6).unwrap();
            assert!(s.ell >= last);
            last = s.ell;
        }
        assert!(schedule_from(0.4, 1e300, 0.6).unwrap().gamma < 0.1);
        assert!(schedule_from(0.4, 1.0, 0.6).is_err());
        assert!(schedule_from(0.4, 4.0, 0.0).is_err());
    }
}
