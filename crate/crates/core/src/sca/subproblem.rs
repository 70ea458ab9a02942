//! Convex surrogate of the backscatter-gain problem around an expansion
//! point `(w_i, S_i)`:
//!
//! ```text
//! maximize    phi_lb(w)
//! subject to  t_pt (mu ||w||^2 + Ps) + B zeta_ub(S) - B log2(phi_lb(w) + chi_lb(w) + 1) <= 0
//!             ||w||^2 <= Pmax
//!             |g^H w|^2 <= S
//! ```
//!
//! with `phi_lb`, `chi_lb` the first-order expansions of `|g^H w|^2` and
//! `|h^H w|^2` at `w_i` and `zeta_ub` that of `log2(S + 1)` at `S_i`.
//!
//! The solver works on the real vector `x = (Re w, Im w, S)` rescaled so
//! that `||w||^2 / Pmax` and `S / (||g||^2 Pmax)` are of order one.

use std::f64::consts::LOG2_E;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::barrier::{BallConstraint, BarrierProblem, BarrierSettings, ConvexConstraint};
use crate::channel::{ChannelSet, RFParams};
use crate::error::{Error, Result};
use crate::linalg::{inner, CVec};

/// Everything needed to state the surrogate problem at one expansion point.
#[derive(Debug, Clone)]
pub struct SubproblemCoeffs {
    pub g_hat: CVec,
    pub h_hat: CVec,
    pub w_ref: CVec,
    pub s_ref: f64,
    /// `g^H w_ref`
    pub z_g: Complex64,
    /// `h^H w_ref`
    pub z_h: Complex64,
    /// Required PT energy efficiency (the `alpha eta` product), bits/Joule.
    pub pt_target: f64,
    pub mu: f64,
    pub ps_w: f64,
    pub bandwidth_hz: f64,
    pub pmax_w: f64,
}

impl SubproblemCoeffs {
    pub fn new(
        w_ref: &CVec,
        s_ref: f64,
        ch: &ChannelSet,
        rf: &RFParams,
        pt_target: f64,
    ) -> Result<Self> {
        Ok(Self {
            g_hat: ch.g_hat().clone(),
            h_hat: ch.h_hat().clone(),
            w_ref: w_ref.clone(),
            s_ref,
            z_g: inner(ch.g_hat(), w_ref)?,
            z_h: inner(ch.h_hat(), w_ref)?,
            pt_target,
            mu: rf.mu,
            ps_w: rf.ps_w,
            bandwidth_hz: rf.bandwidth_hz,
            pmax_w: rf.pmax_w,
        })
    }

    /// Lower bound of `|g^H w|^2`, exact at `w_ref`.
    pub fn phi_lb(&self, w: &CVec) -> Result<f64> {
        Ok(linear_minorant(self.z_g, inner(&self.g_hat, w)?))
    }

    /// Lower bound of `|h^H w|^2`, exact at `w_ref`.
    pub fn chi_lb(&self, w: &CVec) -> Result<f64> {
        Ok(linear_minorant(self.z_h, inner(&self.h_hat, w)?))
    }

    /// Upper bound of `log2(S + 1)`, exact at `s_ref`.
    pub fn zeta_ub(&self, s: f64) -> f64 {
        (self.s_ref).ln_1p() * LOG2_E + LOG2_E / (self.s_ref + 1.0) * (s - self.s_ref)
    }

    /// Left-hand side of the surrogate PT constraint (bits/s); `None` where
    /// the logarithm's argument is not positive.
    pub fn pt_constraint(&self, w: &CVec, s: f64) -> Result<Option<f64>> {
        let arg = self.phi_lb(w)? + self.chi_lb(w)? + 1.0;
        if !(arg > 0.0) {
            return Ok(None);
        }
        Ok(Some(
            self.pt_target * (self.mu * w.norm_sqr() + self.ps_w)
                + self.bandwidth_hz * (self.zeta_ub(s) - arg.log2()),
        ))
    }
}

/// `2 Re{conj(z_ref) z} - |z_ref|^2`, the tangent plane of `|z|^2` at `z_ref`.
fn linear_minorant(z_ref: Complex64, z: Complex64) -> f64 {
    2.0 * (z_ref.conj() * z).re - z_ref.norm_sqr()
}

/// Exact left-hand side of the PT constraint with slack `S` (bits/s).
pub fn pt_constraint_exact(
    w: &CVec,
    s: f64,
    ch: &ChannelSet,
    rf: &RFParams,
    pt_target: f64,
) -> Result<f64> {
    let hw = inner(ch.h_hat(), w)?.norm_sqr();
    let gw = inner(ch.g_hat(), w)?.norm_sqr();
    Ok(pt_target * (rf.mu * w.norm_sqr() + rf.ps_w)
        + rf.bandwidth_hz * LOG2_E * (s.ln_1p() - (hw + gw).ln_1p()))
}

/// Real embedding of `a^H w` for `w = scale * (u + j v)` and
/// `x = (u, v, s)`: `a^H w = re . x + j im . x`.
struct RealForm {
    re: DVector<f64>,
    im: DVector<f64>,
}

impl RealForm {
    fn new(a: &CVec, scale: f64) -> Self {
        let m = a.len();
        let mut re = DVector::zeros(2 * m + 1);
        let mut im = DVector::zeros(2 * m + 1);
        for (k, z) in a.iter().enumerate() {
            re[k] = scale * z.re;
            re[m + k] = scale * z.im;
            im[k] = -scale * z.im;
            im[m + k] = scale * z.re;
        }
        Self { re, im }
    }

    /// Coefficients of `Re{conj(z_ref) a^H w}` as a linear form in `x`.
    fn aligned(&self, z_ref: Complex64) -> DVector<f64> {
        &self.re * z_ref.re + &self.im * z_ref.im
    }
}

/// Scaled surrogate PT constraint, divided by `B`:
/// `quad ||x_w||^2 + konst + slope x_s - log2(lin . x + offset)`.
struct PtConstraint {
    wdim: usize,
    quad: f64,
    konst: f64,
    slope: f64,
    lin: DVector<f64>,
    offset: f64,
}

impl ConvexConstraint for PtConstraint {
    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let arg = self.lin.dot(x) + self.offset;
        if !(arg > 0.0) {
            return None;
        }
        let s = x[self.wdim];
        Some(
            self.quad * x.rows(0, self.wdim).norm_squared() + self.konst + self.slope * s
                - arg.log2(),
        )
    }

    fn derivatives(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        let arg = self.lin.dot(x) + self.offset;
        grad.copy_from(&self.lin);
        *grad *= -LOG2_E / arg;
        hess.fill(0.0);
        hess.ger(LOG2_E / (arg * arg), &self.lin, &self.lin, 1.0);
        for i in 0..self.wdim {
            grad[i] += 2.0 * self.quad * x[i];
            hess[(i, i)] += 2.0 * self.quad;
        }
        grad[self.wdim] += self.slope;
    }
}

/// `(re . x)^2 + (im . x)^2 - x_s <= 0`.
struct GainEpigraph {
    form: RealForm,
    s_index: usize,
}

impl ConvexConstraint for GainEpigraph {
    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let a = self.form.re.dot(x);
        let b = self.form.im.dot(x);
        Some(a * a + b * b - x[self.s_index])
    }

    fn derivatives(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        let a = self.form.re.dot(x);
        let b = self.form.im.dot(x);
        grad.copy_from(&(&self.form.re * (2.0 * a) + &self.form.im * (2.0 * b)));
        grad[self.s_index] -= 1.0;
        hess.fill(0.0);
        hess.ger(2.0, &self.form.re, &self.form.re, 1.0);
        hess.ger(2.0, &self.form.im, &self.form.im, 1.0);
    }
}

/// Optimal point of one surrogate problem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub w: CVec,
    pub s: f64,
    /// Surrogate objective `phi_lb(w)` at the solution.
    pub bound_objective: f64,
    pub newton_iters: usize,
    pub kkt_residual: f64,
    /// True when the warm start was returned because the barrier solution
    /// did not improve on it.
    pub kept_warm_start: bool,
}

/// Solves the surrogate problem from its expansion point, which must be
/// strictly feasible.
pub fn solve_subproblem(
    coeffs: &SubproblemCoeffs,
    settings: &BarrierSettings,
) -> Result<SubproblemSolution> {
    let m = coeffs.w_ref.len();
    let n = 2 * m + 1;
    let g_norm_sq = coeffs.g_hat.norm_sqr();
    if !(g_norm_sq > 0.0) {
        return Err(Error::NoBackscatterLink);
    }
    let w_scale = coeffs.pmax_w.sqrt();
    let s_scale = g_norm_sq * coeffs.pmax_w;

    let g_form = RealForm::new(&coeffs.g_hat, w_scale);
    let h_form = RealForm::new(&coeffs.h_hat, w_scale);
    let g_unit = coeffs.g_hat.scale(1.0 / g_norm_sq.sqrt());

    let mut lin = g_form.aligned(coeffs.z_g) * 2.0 + h_form.aligned(coeffs.z_h) * 2.0;
    lin[2 * m] = 0.0;
    let offset = 1.0 - coeffs.z_g.norm_sqr() - coeffs.z_h.norm_sqr();
    let zeta_slope = LOG2_E / (coeffs.s_ref + 1.0);
    let pt = PtConstraint {
        wdim: 2 * m,
        quad: coeffs.pt_target * coeffs.mu * coeffs.pmax_w / coeffs.bandwidth_hz,
        konst: coeffs.pt_target * coeffs.ps_w / coeffs.bandwidth_hz + coeffs.s_ref.ln_1p() * LOG2_E
            - zeta_slope * coeffs.s_ref,
        slope: zeta_slope * s_scale,
        lin,
        offset,
    };
    let ball = BallConstraint {
        dim: 2 * m,
        radius_sq: 1.0,
    };
    let epigraph = GainEpigraph {
        form: RealForm::new(&g_unit, 1.0),
        s_index: 2 * m,
    };

    let mut objective = g_form.aligned(coeffs.z_g) * (-2.0 / s_scale);
    objective[2 * m] = 0.0;

    let problem = BarrierProblem {
        objective,
        constraints: vec![&pt, &ball, &epigraph],
    };

    let mut x0 = DVector::zeros(n);
    for (k, z) in coeffs.w_ref.iter().enumerate() {
        x0[k] = z.re / w_scale;
        x0[m + k] = z.im / w_scale;
    }
    x0[2 * m] = coeffs.s_ref / s_scale;

    let sol = problem.solve(x0, settings)?;
    let w = CVec::from_real_imag(
        &sol.x.as_slice()[..m]
            .iter()
            .map(|u| u * w_scale)
            .collect::<Vec<_>>(),
        &sol.x.as_slice()[m..2 * m]
            .iter()
            .map(|v| v * w_scale)
            .collect::<Vec<_>>(),
    )?;
    let s = sol.x[2 * m] * s_scale;
    let bound_objective = coeffs.phi_lb(&w)?;
    let warm_objective = coeffs.z_g.norm_sqr();

    if bound_objective < warm_objective {
        return Ok(SubproblemSolution {
            w: coeffs.w_ref.clone(),
            s: coeffs.s_ref,
            bound_objective: warm_objective,
            newton_iters: sol.newton_iters,
            kkt_residual: sol.kkt_residual,
            kept_warm_start: true,
        });
    }
    Ok(SubproblemSolution {
        w,
        s,
        bound_objective,
        newton_iters: sol.newton_iters,
        kkt_residual: sol.kkt_residual,
        kept_warm_start: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_channels, ScenarioGeometry};
    use crate::individual::pt_ee_max;
    use crate::numerics::RootConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (ChannelSet, RFParams, CVec, f64) {
        let rf = RFParams::default();
        let ch = gen_channels(&ScenarioGeometry::default(), &rf, seed).unwrap();
        let corner = pt_ee_max(&ch, &rf, &RootConfig::default()).unwrap();
        let target = 0.6 * corner.ee.ee_pt;
        (ch, rf, corner.beamformer(), target)
    }

    fn random_w(rng: &mut ChaCha8Rng, m: usize, pmax: f64) -> CVec {
        let re: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let im: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = CVec::from_real_imag(&re, &im).unwrap();
        let scale = rng.random_range(0.0..1.0f64).sqrt() * pmax.sqrt() / w.norm();
        w.scale(scale)
    }

    #[test]
    fn bounds_are_tight_at_reference() {
        let (ch, rf, w0, target) = setup(1);
        let s0 = inner(ch.g_hat(), &w0).unwrap().norm_sqr();
        let c = SubproblemCoeffs::new(&w0, s0, &ch, &rf, target).unwrap();
        let g = inner(ch.g_hat(), &w0).unwrap().norm_sqr();
        let h = inner(ch.h_hat(), &w0).unwrap().norm_sqr();
        assert!((c.phi_lb(&w0).unwrap() - g).abs() <= 1e-12 * g);
        assert!((c.chi_lb(&w0).unwrap() - h).abs() <= 1e-12 * h);
        assert!((c.zeta_ub(s0) - s0.ln_1p() * LOG2_E).abs() <= 1e-15);
        let surrogate = c.pt_constraint(&w0, s0).unwrap().unwrap();
        let exact = pt_constraint_exact(&w0, s0, &ch, &rf, target).unwrap();
        assert!((surrogate - exact).abs() <= 1e-9 * rf.bandwidth_hz);
    }

    #[test]
    fn bounds_hold_everywhere() {
        let (ch, rf, w0, target) = setup(2);
        let s0 = inner(ch.g_hat(), &w0).unwrap().norm_sqr();
        let c = SubproblemCoeffs::new(&w0, s0, &ch, &rf, target).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let w = random_w(&mut rng, 4, rf.pmax_w);
            let s = rng.random_range(0.0..2.0) * ch.g_hat().norm_sqr() * rf.pmax_w;
            let g = inner(ch.g_hat(), &w).unwrap().norm_sqr();
            let h = inner(ch.h_hat(), &w).unwrap().norm_sqr();
            assert!(c.phi_lb(&w).unwrap() <= g * (1.0 + 1e-12) + 1e-300);
            assert!(c.chi_lb(&w).unwrap() <= h * (1.0 + 1e-12));
            assert!(c.zeta_ub(s) >= s.ln_1p() * LOG2_E - 1e-15);
            if let Some(surrogate) = c.pt_constraint(&w, s).unwrap() {
                let exact = pt_constraint_exact(&w, s, &ch, &rf, target).unwrap();
                assert!(surrogate >= exact - 1e-6, "{surrogate} < {exact}");
            }
        }
    }

    #[test]
    fn solution_is_feasible_and_beats_samples() {
        let (ch, rf, w0, target) = setup(3);
        let s0 = inner(ch.g_hat(), &w0).unwrap().norm_sqr() * (1.0 + 1e-6);
        let c = SubproblemCoeffs::new(&w0, s0, &ch, &rf, target).unwrap();
        let sol = solve_subproblem(&c, &BarrierSettings::default()).unwrap();
        assert!(!sol.kept_warm_start);
        assert!(sol.w.norm_sqr() <= rf.pmax_w * (1.0 + 1e-12));
        assert!(c.pt_constraint(&sol.w, sol.s).unwrap().unwrap() <= 1e-6);
        assert!(pt_constraint_exact(&sol.w, sol.s, &ch, &rf, target).unwrap() <= 1e-6);
        assert!(sol.bound_objective > c.z_g.norm_sqr());

        // no sampled surrogate-feasible point does better
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut feasible = 0;
        for _ in 0..20_000 {
            let w = random_w(&mut rng, 4, rf.pmax_w);
            let s = inner(ch.g_hat(), &w).unwrap().norm_sqr();
            if c.pt_constraint(&w, s).unwrap().is_some_and(|v| v <= 0.0) {
                feasible += 1;
                assert!(c.phi_lb(&w).unwrap() <= sol.bound_objective * (1.0 + 1e-6));
            }
        }
        assert!(feasible > 0);
    }

    #[test]
    fn zero_cascaded_channel_is_rejected() {
        let h = CVec::basis(2, 0);
        let ch = ChannelSet::from_normalized(h.clone(), CVec::zeros(2)).unwrap();
        let rf = RFParams::default();
        let c = SubproblemCoeffs::new(&h.scale(0.1), 0.0, &ch, &rf, 0.0).unwrap();
        assert!(matches!(
            solve_subproblem(&c, &BarrierSettings::default()),
            Err(Error::NoBackscatterLink)
        ));
    }
}
