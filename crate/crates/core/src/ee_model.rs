//! SINR, rates and energy efficiencies of the PT and BD for a given
//! beamformer. Everything here works on the normalized channels.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, RFParams};
use crate::error::{Error, Result};
use crate::linalg::{inner, CVec};
use crate::numerics::avg_backscatter_spectral;

/// Transmit beamformer `w = sqrt(p) v` with `p = ||w||^2` and `||v|| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beamformer {
    pub w: CVec,
}

impl Beamformer {
    pub fn new(w: CVec) -> Self {
        Self { w }
    }

    pub fn from_power_direction(p: f64, v: &CVec) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("power must be >= 0, got {p}")));
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "direction must be unit norm, got {norm}"
            )));
        }
        Ok(Self {
            w: v.scale(p.sqrt()),
        })
    }

    pub fn power(&self) -> f64 {
        self.w.norm_sqr()
    }

    /// Unit direction, `None` for the zero beamformer.
    pub fn direction(&self) -> Option<CVec> {
        self.w.normalized()
    }

    /// Whether `||w||^2 <= Pmax` up to 1e-9.
    pub fn within_budget(&self, rf: &RFParams) -> bool {
        self.power() <= rf.pmax_w + 1e-9
    }
}

/// An `(EE_PT, EE_BD)` pair in bits/Joule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EEPair {
    pub ee_pt: f64,
    pub ee_bd: f64,
}

/// Desired-signal and backscatter gains `|h_hat^H w|^2`, `|g_hat^H w|^2`.
pub fn link_gains(w: &CVec, ch: &ChannelSet) -> Result<(f64, f64)> {
    let hw = inner(ch.h_hat(), w)?.norm_sqr();
    let gw = inner(ch.g_hat(), w)?.norm_sqr();
    Ok((hw, gw))
}

/// PT SINR at the PR, `|h_hat^H w|^2 / (|g_hat^H w|^2 + 1)`.
pub fn sinr_pt(w: &CVec, ch: &ChannelSet) -> Result<f64> {
    let (hw, gw) = link_gains(w, ch)?;
    Ok(hw / (gw + 1.0))
}

/// Average SNR of the backscatter link, `|g_hat^H w|^2`.
pub fn snr_bd(w: &CVec, ch: &ChannelSet) -> Result<f64> {
    Ok(inner(ch.g_hat(), w)?.norm_sqr())
}

pub fn rate_pt(w: &CVec, ch: &ChannelSet, rf: &RFParams) -> Result<f64> {
    Ok(rf.bandwidth_hz * sinr_pt(w, ch)?.ln_1p() * LOG2_E)
}

/// PT energy efficiency `B log2(1 + SINR) / (mu ||w||^2 + Ps)`.
pub fn ee_pt(w: &CVec, ch: &ChannelSet, rf: &RFParams) -> Result<f64> {
    let denom = rf.mu * w.norm_sqr() + rf.ps_w;
    if !(denom > 0.0) {
        return Err(Error::Domain(
            "PT power consumption is zero (Ps = 0 and w = 0)".into(),
        ));
    }
    Ok(rate_pt(w, ch, rf)? / denom)
}

/// BD energy efficiency from a backscatter SNR `gamma`.
pub fn ee_bd_from_snr(gamma: f64, rf: &RFParams) -> Result<f64> {
    if !(rf.pc_w > 0.0) {
        return Err(Error::Domain(format!(
            "BD circuit power must be positive, got {}",
            rf.pc_w
        )));
    }
    Ok(rf.bandwidth_hz / rf.pc_w * avg_backscatter_spectral(gamma)?)
}

/// BD energy efficiency `(B / Pc) E[log2(1 + |g_hat^H w|^2 X)]`.
pub fn ee_bd(w: &CVec, ch: &ChannelSet, rf: &RFParams) -> Result<f64> {
    ee_bd_from_snr(snr_bd(w, ch)?, rf)
}

pub fn ee_pair(w: &CVec, ch: &ChannelSet, rf: &RFParams) -> Result<EEPair> {
    Ok(EEPair {
        ee_pt: ee_pt(w, ch, rf)?,
        ee_bd: ee_bd(w, ch, rf)?,
    })
}
