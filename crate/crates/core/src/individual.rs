//! Individual EE maxima of the PT and the BD, and the PT-rate-max benchmark.
//!
//! For a fixed transmit power `p` the SINR-optimal direction is the MMSE
//! beam `(g g^H + I/p)^{-1} h` (normalized channels), and the resulting
//! SINR is the scalar curve
//!
//! ```text
//! f(p) = (a p + b p^2) / (1 + c p)
//! a = ||h||^2,  b = ||h||^2 ||g||^2 - |g^H h|^2,  c = ||g||^2
//! ```
//!
//! The PT EE along that curve is quasi-concave in `p`; its stationary point
//! is the unique positive root of
//! `(mu p + Ps) f'(p) / (1 + f(p)) - mu ln(1 + f(p))`.

use std::f64::consts::LOG2_E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, RFParams};
use crate::ee_model::{ee_bd_from_snr, ee_pair, EEPair};
use crate::error::{Error, Result};
use crate::linalg::{inner, reg_rank1_inverse_apply, CVec};
use crate::numerics::{bisect_root, expand_upper_bracket, RootConfig};

/// Lower end of the initial bracket for the optimal-power root, Watts.
const ROOT_BRACKET_LO: f64 = 1e-9;
const ROOT_BRACKET_HI: f64 = 1.0;
const ROOT_MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CornerLabel {
    PtEeMax,
    BdEeMax,
    PtRateMax,
}

impl fmt::Display for CornerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CornerLabel::PtEeMax => "PT_EE_MAX",
            CornerLabel::BdEeMax => "BD_EE_MAX",
            CornerLabel::PtRateMax => "PT_RATE_MAX",
        };
        f.write_str(s)
    }
}

/// A closed-form design point: power, unit direction and the EE pair it
/// achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerResult {
    pub label: CornerLabel,
    pub p_star: f64,
    pub v_star: CVec,
    pub ee: EEPair,
    /// Unclipped stationary power of the PT EE (PT_EE_MAX only, `Ps > 0`).
    pub root_power: Option<f64>,
}

impl CornerResult {
    /// EE of the device this design optimizes.
    pub fn ee_self(&self) -> f64 {
        match self.label {
            CornerLabel::BdEeMax => self.ee.ee_bd,
            CornerLabel::PtEeMax | CornerLabel::PtRateMax => self.ee.ee_pt,
        }
    }

    pub fn ee_other(&self) -> f64 {
        match self.label {
            CornerLabel::BdEeMax => self.ee.ee_pt,
            CornerLabel::PtEeMax | CornerLabel::PtRateMax => self.ee.ee_bd,
        }
    }

    pub fn beamformer(&self) -> CVec {
        self.v_star.scale(self.p_star.sqrt())
    }

    /// Whether the budget clipped the stationary power (`p0 > Pmax`).
    pub fn power_clipped(&self) -> bool {
        self.root_power.is_some_and(|p0| p0 > self.p_star)
    }
}

/// The maximum-SINR-versus-power curve `f(p)` of a channel realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrCurve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SinrCurve {
    pub fn new(ch: &ChannelSet) -> Self {
        let h = ch.h_hat();
        let g = ch.g_hat();
        let a = h.norm_sqr();
        let c = g.norm_sqr();
        // b = c * ||h_perp||^2 with h_perp the part of h orthogonal to g;
        // avoids the cancellation in a c - |g^H h|^2.
        let b = if c > 0.0 {
            let proj = inner(g, h).expect("channels share a length") / c;
            let h_perp = h.axpy(-proj, g).expect("channels share a length");
            c * h_perp.norm_sqr()
        } else {
            0.0
        };
        Self { a, b, c }
    }

    pub fn value(&self, p: f64) -> f64 {
        (self.a * p + self.b * p * p) / (1.0 + self.c * p)
    }

    pub fn derivative(&self, p: f64) -> f64 {
        let den = 1.0 + self.c * p;
        (self.a + 2.0 * self.b * p + self.b * self.c * p * p) / (den * den)
    }

    /// The stationarity function whose sign is that of `d EE_PT / dp`.
    pub fn stationarity(&self, p: f64, rf: &RFParams) -> f64 {
        let f = self.value(p);
        (rf.mu * p + rf.ps_w) * self.derivative(p) / (1.0 + f) - rf.mu * f.ln_1p()
    }

    /// PT EE with the MMSE direction at power `p`.
    pub fn ee_pt(&self, p: f64, rf: &RFParams) -> f64 {
        rf.bandwidth_hz * self.value(p).ln_1p() * LOG2_E / (rf.mu * p + rf.ps_w)
    }

    /// `lim_{p -> 0+} EE_PT(p)` when `Ps = 0`.
    pub fn zero_power_ee_limit(&self, rf: &RFParams) -> f64 {
        rf.bandwidth_hz * self.a * LOG2_E / rf.mu
    }
}

/// Unit direction maximizing the SINR at power `p`:
/// normalized `(g g^H + I/p)^{-1} h`.
pub fn mmse_direction(ch: &ChannelSet, p: f64) -> Result<CVec> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("power must be positive, got {p}")));
    }
    reg_rank1_inverse_apply(ch.g_hat(), 1.0 / p, ch.h_hat())?
        .normalized()
        .ok_or(Error::NoPrimaryLink)
}

/// Maximum SINR at power `p` as the quadratic form
/// `h^H (g g^H + I/p)^{-1} h`; zero at `p = 0`.
pub fn max_sinr_closed(ch: &ChannelSet, p: f64) -> Result<f64> {
    if p.is_nan() || p < 0.0 {
        return Err(Error::Domain(format!("power must be >= 0, got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let y = reg_rank1_inverse_apply(ch.g_hat(), 1.0 / p, ch.h_hat())?;
    Ok(inner(ch.h_hat(), &y)?.re.max(0.0))
}

/// Stationary power `p0` of the PT EE along the MMSE curve.
pub fn theorem1_root(ch: &ChannelSet, rf: &RFParams, cfg: &RootConfig) -> Result<f64> {
    let curve = SinrCurve::new(ch);
    if !(curve.a > 0.0) {
        return Err(Error::NoPrimaryLink);
    }
    if !(rf.ps_w > 0.0) {
        return Err(Error::InvalidParameter(
            "the stationary power exists only for Ps > 0".into(),
        ));
    }
    let h = |p: f64| curve.stationarity(p, rf);
    let lo = if h(ROOT_BRACKET_LO) > 0.0 {
        ROOT_BRACKET_LO
    } else {
        0.0
    };
    let hi0 = if lo == 0.0 {
        ROOT_BRACKET_LO
    } else {
        ROOT_BRACKET_HI
    };
    let (lo, hi) = expand_upper_bracket(h, lo, hi0, ROOT_MAX_DOUBLINGS)?;
    bisect_root(h, lo, hi, cfg)
}

/// PT EE maximum: `p* = min(p0, Pmax)` with the MMSE direction at `p*`.
///
/// With `Ps = 0` the PT EE decreases in `p`; the supremum is the `p -> 0+`
/// limit, reported with `p_star = 0` and `v_star = h / ||h||`.
pub fn pt_ee_max(ch: &ChannelSet, rf: &RFParams, cfg: &RootConfig) -> Result<CornerResult> {
    let curve = SinrCurve::new(ch);
    if !(curve.a > 0.0) {
        return Err(Error::NoPrimaryLink);
    }
    if rf.ps_w == 0.0 {
        let v_star = ch.h_hat().normalized().ok_or(Error::NoPrimaryLink)?;
        return Ok(CornerResult {
            label: CornerLabel::PtEeMax,
            p_star: 0.0,
            v_star,
            ee: EEPair {
                ee_pt: curve.zero_power_ee_limit(rf),
                ee_bd: 0.0,
            },
            root_power: None,
        });
    }
    let p0 = theorem1_root(ch, rf, cfg)?;
    let p_star = p0.min(rf.pmax_w);
    let v_star = mmse_direction(ch, p_star)?;
    let sinr = max_sinr_closed(ch, p_star)?;
    let ee_pt = rf.bandwidth_hz * sinr.ln_1p() * LOG2_E / (rf.mu * p_star + rf.ps_w);
    let gamma_c = inner(ch.g_hat(), &v_star)?.norm_sqr() * p_star;
    let ee_bd = ee_bd_from_snr(gamma_c, rf)?;
    Ok(CornerResult {
        label: CornerLabel::PtEeMax,
        p_star,
        v_star,
        ee: EEPair { ee_pt, ee_bd },
        root_power: Some(p0),
    })
}

/// BD EE maximum: full power, MRT on the cascaded channel.
pub fn bd_ee_max(ch: &ChannelSet, rf: &RFParams) -> Result<CornerResult> {
    let g = ch.g_hat();
    let c = g.norm_sqr();
    if !(c > 0.0) {
        return Err(Error::NoBackscatterLink);
    }
    let p = rf.pmax_w;
    let v_star = g.normalized().ok_or(Error::NoBackscatterLink)?;
    let ee_bd = ee_bd_from_snr(c * p, rf)?;
    let hg = inner(ch.h_hat(), g)?.norm_sqr();
    let sinr = p * hg / (p * c * c + c);
    let ee_pt = rf.bandwidth_hz * sinr.ln_1p() * LOG2_E / (rf.mu * p + rf.ps_w);
    Ok(CornerResult {
        label: CornerLabel::BdEeMax,
        p_star: p,
        v_star,
        ee: EEPair { ee_pt, ee_bd },
        root_power: None,
    })
}

/// PT rate maximum: full power with the MMSE direction (the maximum SINR
/// is non-decreasing in `p`).
pub fn pt_rate_max(ch: &ChannelSet, rf: &RFParams) -> Result<CornerResult> {
    let p = rf.pmax_w;
    let v_star = mmse_direction(ch, p)?;
    let ee = ee_pair(&v_star.scale(p.sqrt()), ch, rf)?;
    Ok(CornerResult {
        label: CornerLabel::PtRateMax,
        p_star: p,
        v_star,
        ee,
        root_power: None,
    })
}
