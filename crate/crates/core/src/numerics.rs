//! Special functions for the backscatter ergodic rate and safeguarded
//! scalar root finding.

use std::f64::consts::LOG2_E;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Stopping rule for the bracketing root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_iters: 200,
        }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Computes `e^z * E1(z)` for real `z > 0` without forming either factor.
///
/// For `z <= 1` the power series of `E1` is summed and multiplied by `e^z`
/// (both factors are moderate there). For `z > 1` the continued fraction
/// for `e^z E1(z)` is evaluated with the modified Lentz method, which is
/// already in scaled form.
pub fn exp_e1_scaled(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "exp_e1_scaled requires finite z > 0, got {z}"
        )));
    }
    if z <= 1.0 {
        Ok(z.exp() * e1_series(z))
    } else {
        Ok(scaled_e1_continued_fraction(z))
    }
}

fn e1_series(z: f64) -> f64 {
    // E1(z) = -gamma - ln z + sum_{k>=1} (-1)^{k+1} z^k / (k k!)
    let mut sum = 0.0;
    let mut power_over_fact = 1.0;
    for k in 1..=60 {
        let kf = k as f64;
        power_over_fact *= z / kf;
        let term = power_over_fact / kf;
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < f64::EPSILON * 1e-2 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() + sum
}

fn scaled_e1_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const MAX_TERMS: usize = 10_000;

    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// Ergodic backscatter spectral efficiency `E[log2(1 + gamma X)]` with
/// `X ~ Exp(1)`, in bits/s/Hz, at average SNR `gamma`.
///
/// Equals `log2(e) * e^{1/gamma} E1(1/gamma)`; zero at `gamma = 0`.
pub fn avg_backscatter_spectral(gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 || gamma.is_infinite() {
        return Err(Error::Domain(format!(
            "backscatter SNR must be finite and >= 0, got {gamma}"
        )));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let z = 1.0 / gamma;
    if z.is_infinite() {
        // subnormal gamma: e^z E1(z) ~ 1/z
        return Ok(LOG2_E * gamma);
    }
    Ok(LOG2_E * exp_e1_scaled(z)?)
}

/// Bisection on a sign-changing bracket.
///
/// The endpoints may be given in either order. Stops once the bracket is no
/// wider than `max(abs_tol, rel_tol * |x|)` and returns its midpoint.
pub fn bisect_root<F>(mut f: F, lo: f64, hi: f64, cfg: &RootConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("non-finite bracket [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Domain("function returned NaN at bracket end".into()));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;

    for _ in 0..cfg.max_iters {
        let mid = lo + 0.5 * (hi - lo);
        let f_mid = f(mid);
        if f_mid.is_nan() {
            return Err(Error::Domain(format!("function returned NaN at {mid}")));
        }
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
        let x = lo + 0.5 * (hi - lo);
        if hi - lo <= cfg.abs_tol.max(cfg.rel_tol * x.abs()) {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        iters: cfg.max_iters,
        best: lo + 0.5 * (hi - lo),
    })
}

/// Doubles `hi` (starting from `hi0 > lo`) until `f` changes sign relative to
/// `f(lo)`. Returns the bracket `(lo, hi)`.
pub fn expand_upper_bracket<F>(
    mut f: F,
    lo: f64,
    hi0: f64,
    max_doublings: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let f_lo = f(lo);
    let mut hi = hi0;
    let mut f_hi = f(hi);
    for _ in 0..max_doublings {
        if f_hi.signum() != f_lo.signum() || f_hi == 0.0 {
            return Ok((lo, hi));
        }
        hi *= 2.0;
        f_hi = f(hi);
    }
    if f_hi.signum() != f_lo.signum() || f_hi == 0.0 {
        Ok((lo, hi))
    } else {
        Err(Error::Bracket { lo, hi, f_lo, f_hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_e1_reference_values() {
        let v = exp_e1_scaled(1.0).unwrap();
        assert!((v - 0.596_347_362_323_194_1).abs() < 1e-14);

        let small = exp_e1_scaled(1e-6).unwrap();
        assert!((small - 13.238_31).abs() < 1e-5, "{small}");

        let z = 1e8;
        let big = exp_e1_scaled(z).unwrap();
        let asym = 1.0 / z - 1.0 / (z * z);
        assert!(((big - asym) / asym).abs() < 1e-7);
    }

    #[test]
    fn scaled_e1_branches_meet_at_one() {
        let below = exp_e1_scaled(1.0).unwrap();
        let above = exp_e1_scaled(1.0 + 1e-12).unwrap();
        assert!(((below - above) / below).abs() < 1e-11);
    }

    #[test]
    fn scaled_e1_rejects_bad_input() {
        for z in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(exp_e1_scaled(z), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn scaled_e1_bounds_and_monotone() {
        let mut prev = f64::INFINITY;
        for i in 0..=240 {
            let z = 10f64.powf(-12.0 + 0.1 * i as f64);
            let v = exp_e1_scaled(z).unwrap();
            assert!(v >= (1.0 - 1e-14) / (z + 1.0) && v < 1.0 / z, "z={z} v={v}");
            assert!(v < prev, "not decreasing at z={z}");
            prev = v;
        }
    }

    #[test]
    fn spectral_zero_and_monotone() {
        assert_eq!(avg_backscatter_spectral(0.0).unwrap(), 0.0);
        let one = avg_backscatter_spectral(1.0).unwrap();
        assert!((one - 0.860_34).abs() < 1e-5);
        assert!(avg_backscatter_spectral(2.0).unwrap() > one);
        assert!(avg_backscatter_spectral(-1e-3).is_err());
        let tiny = avg_backscatter_spectral(1e-320).unwrap();
        assert!(tiny > 0.0);
    }

    #[test]
    fn bisect_simple_roots() {
        let cfg = RootConfig::default();
        let r = bisect_root(|x| x - 1.0, 0.0, 2.0, &cfg).unwrap();
        assert_eq!(r, 1.0);
        let s = bisect_root(|x| x * x - 2.0, 1.0, 2.0, &cfg).unwrap();
        assert!((s - std::f64::consts::SQRT_2).abs() <= 1e-10);
    }

    #[test]
    fn bisect_reports_bracket_error() {
        let cfg = RootConfig::default();
        let err = bisect_root(|x| x * x + 1.0, -1.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn bisect_reports_convergence_error_with_best() {
        let cfg = RootConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_iters: 5,
        };
        match bisect_root(|x| x - 0.3, 0.0, 1.0, &cfg) {
            Err(Error::Convergence { iters, best }) => {
                assert_eq!(iters, 5);
                assert!((best - 0.3).abs() < 1.0 / 32.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn root_config_validation() {
        assert!(RootConfig::default().validate().is_ok());
        let bad = RootConfig {
            abs_tol: 0.0,
            ..RootConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RootConfig {
            max_iters: 0,
            ..RootConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn upper_bracket_expands() {
        let (lo, hi) = expand_upper_bracket(|x| 100.0 - x, 0.0, 1.0, 60).unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 128.0);
        assert!(expand_upper_bracket(|_| 1.0, 0.0, 1.0, 10).is_err());
    }
}
