//! Pareto boundary of the EE region by ray search.
//!
//! For a profile `alpha` the boundary point on the ray `(alpha, 1 - alpha)`
//! is the largest `eta` for which some beamformer reaches
//! `EE_PT >= alpha eta s_pt` and `EE_BD >= (1 - alpha) eta s_bd`.
//! Feasibility of a given `eta` is decided by maximizing the backscatter
//! gain under the PT constraint (SCA) and comparing it with the gain that
//! the BD target requires; `eta` itself is found by bisection.
//!
//! The axis scales `(s_pt, s_bd)` are either the individual maxima of the
//! two EEs ([`ProfileScaling::Corners`], the default) or one bit/Joule
//! each ([`ProfileScaling::Raw`]). Scaling an axis does not change which
//! pairs are Pareto optimal; it only changes which ray a given `alpha`
//! selects.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, RFParams};
use crate::ee_model::{ee_pair, EEPair};
use crate::error::{Error, Result};
use crate::individual::{bd_ee_max, mmse_direction, pt_ee_max, CornerResult, SinrCurve};
use crate::linalg::{inner, CVec};
use crate::numerics::{avg_backscatter_spectral, bisect_root, RootConfig};
use crate::sca::{sca_run, ScaConfig};

pub const ALPHA_MIN: f64 = 1e-3;
pub const ALPHA_MAX: f64 = 1.0 - 1e-3;

/// Ray direction `(alpha, 1 - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EEProfile(f64);

impl EEProfile {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(ALPHA_MIN..=ALPHA_MAX).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "profile alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}], got {alpha}"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    /// `count` evenly spaced profiles on `[min, max]`.
    pub fn grid(count: usize, min: f64, max: f64) -> Result<Vec<Self>> {
        match count {
            0 => Err(Error::InvalidParameter(
                "alpha grid needs at least one point".into(),
            )),
            1 => Ok(vec![Self::new(0.5 * (min + max))?]),
            _ => (0..count)
                .map(|i| Self::new(min + (max - min) * i as f64 / (count - 1) as f64))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileScaling {
    /// Measure each EE relative to its individual maximum.
    #[default]
    Corners,
    /// Use bits/Joule on both axes.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoConfig {
    pub root: RootConfig,
    pub sca: ScaConfig,
    /// Bisection stops when `(hi - lo) / hi` falls below this.
    pub bisection_rel_tol: f64,
    pub max_bisection_iters: usize,
    pub scaling: ProfileScaling,
}

impl Default for ParetoConfig {
    fn default() -> Self {
        Self {
            root: RootConfig::default(),
            sca: ScaConfig::default(),
            bisection_rel_tol: 1e-3,
            max_bisection_iters: 200,
            scaling: ProfileScaling::Corners,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub alpha: f64,
    /// Largest feasible ray scale found (in units of the profile scaling).
    pub eta_star: f64,
    /// `eta_star * (alpha s_pt, (1 - alpha) s_bd)` in bits/Joule.
    pub ray_point: EEPair,
    /// EE pair of the witness beamformer.
    pub achieved: EEPair,
    pub w_star: CVec,
    pub bisection_iters: usize,
    pub sca_total_iters: usize,
}

/// Outcome of one feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<CVec>,
    /// Best backscatter gain found under the PT constraint.
    pub gain: f64,
    /// Gain the BD target requires.
    pub required_gain: f64,
    pub sca_iters: usize,
}

/// Backscatter SNR at which the BD reaches `ee_bd_target` bits/Joule.
pub fn gamma_for_ee_bd(ee_bd_target: f64, rf: &RFParams, cfg: &RootConfig) -> Result<f64> {
    if !(ee_bd_target >= 0.0 && ee_bd_target.is_finite()) {
        return Err(Error::Domain(format!(
            "BD target must be finite and >= 0, got {ee_bd_target}"
        )));
    }
    if ee_bd_target == 0.0 {
        return Ok(0.0);
    }
    let spectral_target = ee_bd_target * rf.pc_w / rf.bandwidth_hz;
    // E[log2(1 + gamma X)] <= gamma log2(e), so gamma >= this guess.
    let guess = spectral_target / std::f64::consts::LOG2_E;
    let residual = |u: f64| avg_backscatter_spectral(u.exp()).unwrap_or(f64::NAN) - spectral_target;
    let lo = guess.ln();
    if residual(lo) >= 0.0 {
        // Only reachable when the linear regime holds to round-off.
        return Ok(guess);
    }
    let mut hi = lo + std::f64::consts::LN_2;
    let mut doublings = 0;
    while residual(hi) < 0.0 {
        hi += std::f64::consts::LN_2 * (1u64 << doublings.min(10)) as f64;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Bracket {
                lo,
                hi,
                f_lo: residual(lo),
                f_hi: residual(hi),
            });
        }
    }
    let log_cfg = RootConfig {
        abs_tol: cfg.rel_tol,
        rel_tol: 1e-15,
        max_iters: cfg.max_iters,
    };
    Ok(bisect_root(residual, lo, hi, &log_cfg)?.exp())
}

/// Backscatter SNR threshold for a raw-unit ray scale `eta` and profile
/// `alpha`: the root of `(B / Pc) E[log2(1 + gamma X)] = (1 - alpha) eta`.
pub fn gamma_threshold(eta: f64, alpha: f64, rf: &RFParams) -> Result<f64> {
    gamma_for_ee_bd((1.0 - alpha) * eta, rf, &RootConfig::default())
}

/// Boundary tracer for one channel realization. Holds the two corners,
/// which fix the bisection bracket and the profile scaling.
#[derive(Debug, Clone)]
pub struct ParetoSolver<'a> {
    ch: &'a ChannelSet,
    rf: &'a RFParams,
    cfg: ParetoConfig,
    pt_corner: CornerResult,
    bd_corner: CornerResult,
}

impl<'a> ParetoSolver<'a> {
    pub fn new(ch: &'a ChannelSet, rf: &'a RFParams, cfg: ParetoConfig) -> Result<Self> {
        let pt_corner = pt_ee_max(ch, rf, &cfg.root)?;
        let bd_corner = bd_ee_max(ch, rf)?;
        Ok(Self {
            ch,
            rf,
            cfg,
            pt_corner,
            bd_corner,
        })
    }

    pub fn pt_corner(&self) -> &CornerResult {
        &self.pt_corner
    }

    pub fn bd_corner(&self) -> &CornerResult {
        &self.bd_corner
    }

    /// `(s_pt, s_bd)` in bits/Joule.
    pub fn axis_scales(&self) -> (f64, f64) {
        match self.cfg.scaling {
            ProfileScaling::Corners => (self.pt_corner.ee.ee_pt, self.bd_corner.ee.ee_bd),
            ProfileScaling::Raw => (1.0, 1.0),
        }
    }

    /// `(EE_PT target, EE_BD target)` in bits/Joule.
    pub fn targets(&self, eta: f64, alpha: f64) -> (f64, f64) {
        let (s_pt, s_bd) = self.axis_scales();
        (alpha * eta * s_pt, (1.0 - alpha) * eta * s_bd)
    }

    /// Upper end of the bisection bracket: beyond it one of the targets
    /// exceeds that EE's individual maximum.
    pub fn eta_upper(&self, alpha: f64) -> f64 {
        let (s_pt, s_bd) = self.axis_scales();
        (self.pt_corner.ee.ee_pt / (alpha * s_pt))
            .min(self.bd_corner.ee.ee_bd / ((1.0 - alpha) * s_bd))
    }

    /// Strictly feasible SCA start for a PT target below the PT maximum.
    ///
    /// Normally the PT-EE corner beamformer. With `Ps = 0` that corner sits
    /// at zero power, so the largest power on the MMSE curve whose PT EE is
    /// still halfway between the target and the maximum is used instead.
    pub fn initial_point(&self, pt_target: f64) -> Result<CVec> {
        if self.pt_corner.p_star > 0.0 {
            return Ok(self.pt_corner.beamformer());
        }
        let curve = SinrCurve::new(self.ch);
        let level = 0.5 * (pt_target + self.pt_corner.ee.ee_pt);
        let pmax = self.rf.pmax_w;
        let p = if curve.ee_pt(pmax, self.rf) >= level {
            pmax
        } else {
            let lo = pmax * 1e-12;
            let rel = |p: f64| curve.ee_pt(p, self.rf) / level - 1.0;
            if rel(lo) <= 0.0 {
                lo
            } else {
                bisect_root(rel, lo, pmax, &self.cfg.root)? * (1.0 - 1e-9)
            }
        };
        Ok(mmse_direction(self.ch, p)?.scale(p.sqrt()))
    }

    pub fn is_feasible(&self, eta: f64, alpha: f64) -> Result<Feasibility> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!(
                "eta must be finite and >= 0, got {eta}"
            )));
        }
        let (t_pt, t_bd) = self.targets(eta, alpha);
        let infeasible = |required_gain: f64| Feasibility {
            feasible: false,
            witness: None,
            gain: 0.0,
            required_gain,
            sca_iters: 0,
        };
        if t_pt >= self.pt_corner.ee.ee_pt && eta > 0.0 {
            return Ok(infeasible(f64::NAN));
        }
        if t_bd > self.bd_corner.ee.ee_bd {
            return Ok(infeasible(f64::NAN));
        }
        let required_gain = gamma_for_ee_bd(t_bd, self.rf, &self.cfg.root)?;
        let w0 = self.initial_point(t_pt)?;
        let gain0 = inner(self.ch.g_hat(), &w0)?.norm_sqr();
        if gain0 >= required_gain {
            return Ok(Feasibility {
                feasible: true,
                witness: Some(w0),
                gain: gain0,
                required_gain,
                sca_iters: 0,
            });
        }
        let out = match sca_run(t_pt, &w0, self.ch, self.rf, &self.cfg.sca) {
            Ok(out) => out,
            // The PT target sits at the maximum up to round-off, so no
            // beamformer improves on w0.
            Err(Error::Infeasible(_)) => {
                return Ok(Feasibility {
                    gain: gain0,
                    ..infeasible(required_gain)
                })
            }
            Err(e) => return Err(e),
        };
        let feasible = out.gain_star >= required_gain;
        Ok(Feasibility {
            feasible,
            witness: feasible.then_some(out.w_star),
            gain: out.gain_star,
            required_gain,
            sca_iters: out.iterations,
        })
    }

    pub fn pareto_point(&self, profile: EEProfile) -> Result<ParetoPoint> {
        let alpha = profile.alpha();
        let mut lo = 0.0;
        let mut hi = self.eta_upper(alpha);
        let mut witness = self
            .is_feasible(0.0, alpha)?
            .witness
            .expect("eta = 0 is always feasible");
        let mut bisection_iters = 0;
        let mut sca_total_iters = 0;
        while (hi - lo) >= self.cfg.bisection_rel_tol * hi {
            if bisection_iters >= self.cfg.max_bisection_iters {
                return Err(Error::Convergence {
                    iters: bisection_iters,
                    best: lo,
                });
            }
            let mid = 0.5 * (lo + hi);
            let test = self.is_feasible(mid, alpha)?;
            bisection_iters += 1;
            sca_total_iters += test.sca_iters;
            match test.witness {
                Some(w) if test.feasible => {
                    lo = mid;
                    witness = w;
                }
                _ => hi = mid,
            }
        }
        let (t_pt, t_bd) = self.targets(lo, alpha);
        let achieved = ee_pair(&witness, self.ch, self.rf)?;
        Ok(ParetoPoint {
            alpha,
            eta_star: lo,
            ray_point: EEPair {
                ee_pt: t_pt,
                ee_bd: t_bd,
            },
            achieved,
            w_star: witness,
            bisection_iters,
            sca_total_iters,
        })
    }

    /// One boundary point per profile, computed in parallel and returned in
    /// input order. A failure at one profile does not stop the others.
    pub fn boundary_sweep(&self, profiles: &[EEProfile]) -> Vec<Result<ParetoPoint>> {
        profiles.par_iter().map(|&p| self.pareto_point(p)).collect()
    }
}

pub fn is_feasible(
    eta: f64,
    alpha: f64,
    ch: &ChannelSet,
    rf: &RFParams,
    cfg: &ParetoConfig,
) -> Result<Feasibility> {
    ParetoSolver::new(ch, rf, *cfg)?.is_feasible(eta, alpha)
}

pub fn pareto_point(
    profile: EEProfile,
    ch: &ChannelSet,
    rf: &RFParams,
    cfg: &ParetoConfig,
) -> Result<ParetoPoint> {
    ParetoSolver::new(ch, rf, *cfg)?.pareto_point(profile)
}

pub fn boundary_sweep(
    profiles: &[EEProfile],
    ch: &ChannelSet,
    rf: &RFParams,
    cfg: &ParetoConfig,
) -> Result<Vec<Result<ParetoPoint>>> {
    if profiles.is_empty() {
        return Err(Error::InvalidParameter("profile list is empty".into()));
    }
    Ok(ParetoSolver::new(ch, rf, *cfg)?.boundary_sweep(profiles))
}

/// Piecewise-linear outer boundary through a set of EE pairs.
///
/// Only mutually non-dominated pairs are kept. Left of the first kept pair
/// the boundary is flat at its `ee_bd`; right of the last one nothing is
/// dominated.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    points: Vec<EEPair>,
}

impl BoundaryCurve {
    pub fn new<I: IntoIterator<Item = EEPair>>(pairs: I) -> Self {
        let mut all: Vec<EEPair> = pairs.into_iter().collect();
        all.sort_by(|a, b| {
            b.ee_pt
                .total_cmp(&a.ee_pt)
                .then(b.ee_bd.total_cmp(&a.ee_bd))
        });
        let mut points = Vec::with_capacity(all.len());
        let mut best_bd = f64::NEG_INFINITY;
        for p in all {
            if p.ee_bd > best_bd {
                best_bd = p.ee_bd;
                points.push(p);
            }
        }
        points.reverse();
        Self { points }
    }

    pub fn points(&self) -> &[EEPair] {
        &self.points
    }

    /// Boundary `ee_bd` at abscissa `ee_pt`, `None` beyond the last point.
    pub fn ee_bd_at(&self, ee_pt: f64) -> Option<f64> {
        let first = self.points.first()?;
        if ee_pt <= first.ee_pt {
            return Some(first.ee_bd);
        }
        self.points.windows(2).find_map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            (ee_pt <= b.ee_pt).then(|| {
                let t = (ee_pt - a.ee_pt) / (b.ee_pt - a.ee_pt);
                a.ee_bd + t * (b.ee_bd - a.ee_bd)
            })
        })
    }

    /// Whether `q`, shrunk by `tol` on both axes, lies on or under the curve.
    pub fn weakly_dominates(&self, q: EEPair, tol: f64) -> bool {
        self.ee_bd_at(q.ee_pt * (1.0 - tol))
            .is_some_and(|y| y >= q.ee_bd * (1.0 - tol))
    }
}
