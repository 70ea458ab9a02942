//! Successive convex approximation for the backscatter-gain problem
//!
//! ```text
//! maximize    |g^H w|^2
//! subject to  EE_PT(w) >= t_pt,   ||w||^2 <= Pmax
//! ```
//!
//! written with a slack `S >= |g^H w|^2` in place of the interference term
//! of the PT rate. Every iteration linearizes around the current point and
//! solves the convex surrogate exactly with the embedded barrier solver.
//! The surrogate is a restriction of the original problem, so each iterate
//! stays feasible and the true objective never decreases.

pub mod barrier;
pub mod subproblem;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, RFParams};
use crate::ee_model::ee_bd_from_snr;
use crate::error::{Error, Result};
use crate::linalg::{inner, CVec};

pub use barrier::BarrierSettings;
pub use subproblem::{pt_constraint_exact, solve_subproblem, SubproblemCoeffs, SubproblemSolution};

/// Relaxation added to the initial slack for strict interiority, relative to
/// the largest achievable gain `||g||^2 Pmax`.
const INITIAL_SLACK_RELAX: f64 = 1e-9;
/// Relative distance to a constraint boundary that triggers the shrink step.
const BOUNDARY_TOL: f64 = 1e-10;
const SHRINK_FACTOR: f64 = 1.0 - 1e-8;
/// Smallest PT slack (bits/s/Hz) accepted as strict; below it the scaled
/// surrogate cannot tell the point from the boundary.
const PT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaConfig {
    /// Stop once the surrogate objective grows by less than this fraction.
    pub kappa: f64,
    pub max_iters: usize,
    pub barrier: BarrierSettings,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            kappa: 1e-3,
            max_iters: 500,
            barrier: BarrierSettings::default(),
        }
    }
}

/// Current SCA iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    pub w: CVec,
    pub s: f64,
    pub objective_trace: Vec<f64>,
    pub kappa: f64,
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaRecord {
    pub iteration: usize,
    /// Optimal value of the surrogate (a lower bound on the gain).
    pub bound_gain: f64,
    /// `|g^H w|^2` at the new iterate.
    pub accurate_gain: f64,
    pub bound_ee_bd: f64,
    pub accurate_ee_bd: f64,
}

#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub w_star: CVec,
    pub s_star: f64,
    pub gain_star: f64,
    pub trace: Vec<ScaRecord>,
    /// Number of surrogate problems solved.
    pub iterations: usize,
    pub newton_iters: usize,
}

/// Builds the surrogate around the current state.
pub fn linearize(
    state: &ScaState,
    ch: &ChannelSet,
    rf: &RFParams,
    pt_target: f64,
) -> Result<SubproblemCoeffs> {
    SubproblemCoeffs::new(&state.w, state.s, ch, rf, pt_target)
}

fn gain(w: &CVec, ch: &ChannelSet) -> Result<f64> {
    Ok(inner(ch.g_hat(), w)?.norm_sqr())
}

/// Slacks of the three constraints, each relative to a natural scale;
/// positive means strictly satisfied.
fn relative_slacks(
    w: &CVec,
    s: f64,
    ch: &ChannelSet,
    rf: &RFParams,
    pt_target: f64,
) -> Result<[f64; 3]> {
    let pt = -pt_constraint_exact(w, s, ch, rf, pt_target)? / rf.bandwidth_hz;
    let power = (rf.pmax_w - w.norm_sqr()) / rf.pmax_w;
    let scale = ch.g_hat().norm_sqr() * rf.pmax_w;
    let epi = (s - gain(w, ch)?) / scale;
    Ok([pt, power, epi])
}

/// Moves a point sitting on the power or gain boundary strictly inside.
fn restore_interior(
    mut w: CVec,
    s: f64,
    ch: &ChannelSet,
    rf: &RFParams,
    pt_target: f64,
) -> Result<CVec> {
    for _ in 0..100 {
        let [_, power, epi] = relative_slacks(&w, s, ch, rf, pt_target)?;
        if power > BOUNDARY_TOL && epi > BOUNDARY_TOL {
            break;
        }
        w = w.scale(SHRINK_FACTOR);
    }
    Ok(w)
}

fn strictly_feasible([pt, power, epi]: [f64; 3]) -> bool {
    pt > PT_MARGIN && power > 0.0 && epi > 0.0
}

fn record(iteration: usize, bound: f64, accurate: f64, rf: &RFParams) -> Result<ScaRecord> {
    Ok(ScaRecord {
        iteration,
        bound_gain: bound,
        accurate_gain: accurate,
        bound_ee_bd: ee_bd_from_snr(bound.max(0.0), rf)?,
        accurate_ee_bd: ee_bd_from_snr(accurate, rf)?,
    })
}

/// Runs SCA from `w0`, which must satisfy `EE_PT(w0) > pt_target` and
/// `||w0||^2 <= Pmax`.
///
/// `pt_target` is the PT energy efficiency the beamformer must keep
/// (bits/Joule). Trace row 0 describes `w0` itself.
pub fn sca_run(
    pt_target: f64,
    w0: &CVec,
    ch: &ChannelSet,
    rf: &RFParams,
    cfg: &ScaConfig,
) -> Result<ScaOutcome> {
    if w0.len() != ch.antennas() {
        return Err(Error::DimensionMismatch {
            left: w0.len(),
            right: ch.antennas(),
        });
    }
    if !(pt_target >= 0.0 && pt_target.is_finite()) {
        return Err(Error::Domain(format!(
            "PT target must be >= 0, got {pt_target}"
        )));
    }
    let gain0 = gain(w0, ch)?;
    if ch.g_hat().norm_sqr() == 0.0 {
        return Ok(ScaOutcome {
            w_star: w0.clone(),
            s_star: 0.0,
            gain_star: 0.0,
            trace: vec![record(0, 0.0, 0.0, rf)?],
            iterations: 0,
            newton_iters: 0,
        });
    }
    if w0.norm_sqr() > rf.pmax_w * (1.0 + BOUNDARY_TOL) {
        return Err(Error::Infeasible(format!(
            "||w0||^2 = {} exceeds Pmax = {}",
            w0.norm_sqr(),
            rf.pmax_w
        )));
    }

    let s_scale = ch.g_hat().norm_sqr() * rf.pmax_w;
    let s0 = gain0 + INITIAL_SLACK_RELAX * s_scale;
    let w0 = restore_interior(w0.clone(), s0, ch, rf, pt_target)?;
    let slacks = relative_slacks(&w0, s0, ch, rf, pt_target)?;
    if !strictly_feasible(slacks) {
        return Err(Error::Infeasible(format!(
            "w0 does not satisfy the PT constraint strictly (slack {:e} bits/s/Hz)",
            slacks[0]
        )));
    }

    let gain0 = gain(&w0, ch)?;
    let mut state = ScaState {
        w: w0,
        s: s0,
        objective_trace: vec![gain0],
        kappa: cfg.kappa,
    };
    let mut trace = vec![record(0, gain0, gain0, rf)?];
    let mut prev_bound = gain0;
    let mut current_gain = gain0;
    let mut newton_iters = 0;

    for iteration in 1..=cfg.max_iters {
        let coeffs = linearize(&state, ch, rf, pt_target)?;
        let sol = solve_subproblem(&coeffs, &cfg.barrier)?;
        newton_iters += sol.newton_iters;
        let w_next = restore_interior(sol.w, sol.s, ch, rf, pt_target)?;
        let gain_next = gain(&w_next, ch)?;
        // Lowering S to the gain only loosens the PT constraint.
        let s_next = sol.s.min(gain_next + INITIAL_SLACK_RELAX * s_scale);
        let interior = strictly_feasible(relative_slacks(&w_next, s_next, ch, rf, pt_target)?);
        if sol.kept_warm_start || gain_next < current_gain || !interior {
            return Ok(ScaOutcome {
                w_star: state.w,
                s_star: state.s,
                gain_star: current_gain,
                trace,
                iterations: iteration,
                newton_iters,
            });
        }

        let bound = coeffs.phi_lb(&w_next)?;
        trace.push(record(iteration, bound, gain_next, rf)?);
        let rel_increase = if prev_bound > 0.0 {
            (bound - prev_bound) / prev_bound
        } else {
            f64::INFINITY
        };

        current_gain = gain_next;
        state.w = w_next;
        state.s = s_next;
        state.objective_trace.push(current_gain);
        prev_bound = bound;

        if rel_increase < cfg.kappa {
            return Ok(ScaOutcome {
                w_star: state.w,
                s_star: state.s,
                gain_star: current_gain,
                trace,
                iterations: iteration,
                newton_iters,
            });
        }
    }
    Err(Error::Convergence {
        iters: cfg.max_iters,
        best: current_gain,
    })
}
