//! Log-barrier interior-point method for small smooth convex problems
//!
//! ```text
//! minimize    c^T x
//! subject to  f_k(x) <= 0,   k = 1..m
//! ```
//!
//! starting from a strictly feasible point. Each barrier stage minimizes
//! `t c^T x - sum_k ln(-f_k(x))` by damped Newton steps; `t` grows
//! geometrically up to `t_max`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A convex constraint `f(x) <= 0` with first and second derivatives.
pub trait ConvexConstraint: Send + Sync {
    /// `f(x)`, or `None` when `x` lies outside the domain of `f`.
    fn value(&self, x: &DVector<f64>) -> Option<f64>;

    /// Overwrites `grad` and `hess` with the derivatives of `f` at `x`.
    fn derivatives(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSettings {
    pub t_initial: f64,
    pub t_factor: f64,
    pub t_max: f64,
    /// Newton decrement at which a centering step is considered converged.
    pub newton_tol: f64,
    /// Decrement accepted when round-off stalls the line search. The
    /// centering error this leaves is about `stall_tol^2 / (2 t)`, far
    /// below the gap bound `m / t`.
    pub stall_tol: f64,
    pub max_newton_per_stage: usize,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            t_initial: 1.0,
            t_factor: 5.0,
            t_max: 1e8,
            newton_tol: 1e-8,
            stall_tol: 1e-3,
            max_newton_per_stage: 100,
            armijo: 0.25,
            backtrack: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub x: DVector<f64>,
    pub newton_iters: usize,
    pub stages: usize,
    /// Newton decrement of the last centering step.
    pub kkt_residual: f64,
    /// Duality gap bound `m / t` of the final stage.
    pub gap_bound: f64,
}

pub struct BarrierProblem<'a> {
    pub objective: DVector<f64>,
    pub constraints: Vec<&'a dyn ConvexConstraint>,
}

impl<'a> BarrierProblem<'a> {
    fn slacks(&self, x: &DVector<f64>) -> Option<Vec<f64>> {
        self.constraints
            .iter()
            .map(|c| c.value(x).filter(|v| *v < 0.0).map(|v| -v))
            .collect()
    }

    fn merit(&self, t: f64, x: &DVector<f64>) -> Option<f64> {
        let slacks = self.slacks(x)?;
        Some(t * self.objective.dot(x) - slacks.iter().map(|s| s.ln()).sum::<f64>())
    }

    fn newton_system(
        &self,
        t: f64,
        x: &DVector<f64>,
        slacks: &[f64],
    ) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let mut grad = &self.objective * t;
        let mut hess = DMatrix::zeros(n, n);
        let mut gk = DVector::zeros(n);
        let mut hk = DMatrix::zeros(n, n);
        for (c, &s) in self.constraints.iter().zip(slacks) {
            c.derivatives(x, &mut gk, &mut hk);
            grad.axpy(1.0 / s, &gk, 1.0);
            hess += &hk / s;
            hess.ger(1.0 / (s * s), &gk, &gk, 1.0);
        }
        (grad, hess)
    }

    /// Runs the barrier method from the strictly feasible point `x0`.
    pub fn solve(&self, x0: DVector<f64>, settings: &BarrierSettings) -> Result<BarrierSolution> {
        if self.slacks(&x0).is_none() {
            return Err(Error::Infeasible(
                "barrier start point violates a constraint".into(),
            ));
        }
        let m = self.constraints.len() as f64;
        let mut x = x0;
        let mut t = settings.t_initial;
        let mut newton_iters = 0;
        let mut stages = 0;
        let mut kkt_residual;
        loop {
            let (x_next, iters, decrement) = self.center(t, x, settings)?;
            x = x_next;
            newton_iters += iters;
            stages += 1;
            kkt_residual = decrement;
            if t >= settings.t_max {
                break;
            }
            t = (t * settings.t_factor).min(settings.t_max);
        }
        Ok(BarrierSolution {
            x,
            newton_iters,
            stages,
            kkt_residual,
            gap_bound: m / t,
        })
    }

    fn center(
        &self,
        t: f64,
        mut x: DVector<f64>,
        settings: &BarrierSettings,
    ) -> Result<(DVector<f64>, usize, f64)> {
        let mut decrement = f64::INFINITY;
        for iter in 0..settings.max_newton_per_stage {
            let slacks = self.slacks(&x).expect("iterate stays strictly feasible");
            let (grad, hess) = self.newton_system(t, &x, &slacks);
            let step = solve_spd(hess, &grad)?;
            let lambda_sq = -grad.dot(&step);
            decrement = lambda_sq.max(0.0).sqrt();
            if decrement <= settings.newton_tol {
                return Ok((x, iter, decrement));
            }

            let phi0 = self.merit(t, &x).expect("feasible");
            let slope = grad.dot(&step);
            let mut s = 1.0;
            let mut accepted = None;
            while s > 1e-16 {
                let trial = &x + &step * s;
                if let Some(phi) = self.merit(t, &trial) {
                    // Inside the quadratic region the full step is taken when
                    // it stays feasible; round-off makes Armijo unreliable there.
                    if decrement < 0.25 || phi <= phi0 + settings.armijo * s * slope {
                        accepted = Some(trial);
                        break;
                    }
                }
                s *= settings.backtrack;
            }
            match accepted {
                Some(next) => x = next,
                None if decrement <= settings.stall_tol => return Ok((x, iter, decrement)),
                None => {
                    return Err(Error::Solver(format!(
                        "line search failed at t = {t:e} with Newton decrement {decrement:e}"
                    )))
                }
            }
        }
        if decrement <= settings.stall_tol {
            Ok((x, settings.max_newton_per_stage, decrement))
        } else {
            Err(Error::Solver(format!(
                "Newton did not converge at t = {t:e} (decrement {decrement:e})"
            )))
        }
    }
}

/// Solves `H d = -g` for symmetric positive definite `H`, adding a small
/// ridge if the Cholesky factorization fails.
fn solve_spd(hess: DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = hess
        .diagonal()
        .iter()
        .fold(0.0f64, |a, &d| a.max(d.abs()))
        .max(1.0);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        if ridge > 0.0 {
            for i in 0..h.nrows() {
                h[(i, i)] += ridge;
            }
        }
        if let Some(chol) = h.cholesky() {
            return Ok(-chol.solve(grad));
        }
        ridge = if ridge == 0.0 {
            1e-14 * scale
        } else {
            ridge * 100.0
        };
    }
    Err(Error::Solver(
        "Newton system is not positive definite".into(),
    ))
}

/// `||x[..dim]||^2 - radius_sq <= 0`.
pub struct BallConstraint {
    pub dim: usize,
    pub radius_sq: f64,
}

impl ConvexConstraint for BallConstraint {
    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        Some(x.rows(0, self.dim).norm_squared() - self.radius_sq)
    }

    fn derivatives(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        grad.fill(0.0);
        hess.fill(0.0);
        for i in 0..self.dim {
            grad[i] = 2.0 * x[i];
            hess[(i, i)] = 2.0;
        }
    }
}
