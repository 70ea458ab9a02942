//! Property checks on the configured scenario.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{csv_string, CliError, CommandOutput, ExperimentConfig};
use crate::channel::{gen_channels, ChannelSet, RFParams};
use crate::ee_model::{ee_bd_from_snr, sinr_pt, snr_bd};
use crate::error::Result;
use crate::individual::{bd_ee_max, max_sinr_closed, mmse_direction, pt_ee_max, SinrCurve};
use crate::linalg::{reg_rank1_inverse_apply, CVec};
use crate::numerics::RootConfig;
use crate::pareto::{gamma_for_ee_bd, EEProfile, ParetoSolver};
use crate::sca::sca_run;

const GRID: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub seed: Option<u64>,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, seed: Option<u64>, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult {
            name,
            seed,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            seed,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn spectral_round_trip(rf: &RFParams, root: &RootConfig) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for k in -8..=6 {
        let gamma = 10f64.powi(k);
        let back = gamma_for_ee_bd(ee_bd_from_snr(gamma, rf)?, rf, root)?;
        worst = worst.max(rel(back, gamma));
    }
    Ok((worst <= 1e-8, format!("max rel err {worst:.2e}")))
}

fn power_grid(pmax: f64) -> impl Iterator<Item = f64> {
    (0..=GRID).map(move |k| 10.0 * pmax * k as f64 / GRID as f64)
}

fn closed_form_sinr(ch: &ChannelSet, rf: &RFParams) -> Result<(bool, String)> {
    let curve = SinrCurve::new(ch);
    let mut worst: f64 = 0.0;
    for p in power_grid(rf.pmax_w).skip(1).step_by(50) {
        worst = worst.max(rel(max_sinr_closed(ch, p)?, curve.value(p)));
    }
    Ok((worst <= 1e-10, format!("max rel err {worst:.2e}")))
}

fn mmse_attains(ch: &ChannelSet, rf: &RFParams) -> Result<(bool, String)> {
    let curve = SinrCurve::new(ch);
    let mut worst: f64 = 0.0;
    for p in power_grid(rf.pmax_w).skip(1).step_by(50) {
        let w = mmse_direction(ch, p)?.scale(p.sqrt());
        worst = worst.max(rel(sinr_pt(&w, ch)?, curve.value(p)));
    }
    Ok((worst <= 1e-9, format!("max rel err {worst:.2e}")))
}

fn woodbury_vs_dense(ch: &ChannelSet, rf: &RFParams) -> Result<(bool, String)> {
    let g = ch.g_hat();
    let m = g.len();
    let c = 1.0 / rf.pmax_w;
    let gv = DVector::from_iterator(m, g.iter().copied());
    let a = &gv * gv.adjoint() + DMatrix::<Complex64>::identity(m, m) * Complex64::new(c, 0.0);
    let x = DVector::from_iterator(m, ch.h_hat().iter().copied());
    let dense = a
        .lu()
        .solve(&x)
        .ok_or_else(|| crate::error::Error::Solver("singular dense system".into()))?;
    let fast = reg_rank1_inverse_apply(g, c, ch.h_hat())?;
    let dense = CVec::new(dense.iter().copied().collect())?;
    let err = fast.sub(&dense)?.norm() / dense.norm();
    Ok((err <= 1e-10, format!("rel err {err:.2e}")))
}

fn curve_shape(ch: &ChannelSet, rf: &RFParams) -> [(&'static str, bool, String); 4] {
    let curve = SinrCurve::new(ch);
    let ps: Vec<f64> = power_grid(rf.pmax_w).collect();
    let f: Vec<f64> = ps.iter().map(|&p| curve.value(p)).collect();
    let df: Vec<f64> = ps.iter().map(|&p| curve.derivative(p)).collect();
    let h: Vec<f64> = ps.iter().map(|&p| curve.stationarity(p, rf)).collect();
    let tol = 1e-12;
    let f_inc = f.windows(2).filter(|w| w[1] < w[0] * (1.0 - tol)).count();
    let f_conc = df.windows(2).filter(|w| w[1] > w[0] * (1.0 + tol)).count();
    let h_scale = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let h_dec = h.windows(2).filter(|w| w[1] > w[0] + tol * h_scale).count();
    let h0 = h[0];
    let h0_expected = curve.a * rf.ps_w;
    let h0_ok = rel(h0, h0_expected) <= 1e-12 && (rf.ps_w == 0.0 || h0 > 0.0);
    [
        (
            "f_increasing",
            f_inc == 0,
            format!("{f_inc} violations on {} points", ps.len()),
        ),
        ("f_concave", f_conc == 0, format!("{f_conc} violations")),
        ("h_nonincreasing", h_dec == 0, format!("{h_dec} violations")),
        (
            "h_at_zero",
            h0_ok,
            format!("h(0) = {h0:.6e}, ||h||^2 Ps = {h0_expected:.6e}"),
        ),
    ]
}

fn pt_corner_grid(ch: &ChannelSet, rf: &RFParams, root: &RootConfig) -> Result<(bool, String)> {
    let corner = pt_ee_max(ch, rf, root)?;
    let curve = SinrCurve::new(ch);
    let n = 10_000;
    let best = (1..=n)
        .map(|k| curve.ee_pt(rf.pmax_w * k as f64 / n as f64, rf))
        .fold(0.0f64, f64::max);
    let ok = corner.ee.ee_pt >= best * (1.0 - 5e-4);
    Ok((
        ok,
        format!("corner {:.6e} vs grid {best:.6e}", corner.ee.ee_pt),
    ))
}

fn bd_corner(ch: &ChannelSet, rf: &RFParams, root: &RootConfig) -> Result<(bool, String)> {
    let bd = bd_ee_max(ch, rf)?;
    let pt = pt_ee_max(ch, rf, root)?;
    let gain = snr_bd(&bd.beamformer(), ch)?;
    let expected = ch.g_hat().norm_sqr() * rf.pmax_w;
    let ok = rel(gain, expected) <= 1e-12 && bd.ee.ee_bd >= pt.ee.ee_bd;
    Ok((
        ok,
        format!("gain {gain:.6e} vs ||g||^2 Pmax {expected:.6e}"),
    ))
}

fn sca_trace(ch: &ChannelSet, cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let solver = ParetoSolver::new(ch, &cfg.rf, cfg.solver)?;
    let profile = EEProfile::new(0.5)?;
    let eta = 0.99 * solver.pareto_point(profile)?.eta_star;
    let (t_pt, _) = solver.targets(eta, profile.alpha());
    let w0 = solver.initial_point(t_pt)?;
    let out = sca_run(t_pt, &w0, ch, &cfg.rf, &cfg.solver.sca)?;
    let monotone = out
        .trace
        .windows(2)
        .all(|w| w[1].accurate_gain >= w[0].accurate_gain * (1.0 - 1e-9));
    let bounded = out.trace.iter().all(|r| r.accurate_gain >= r.bound_gain);
    let ok = monotone && bounded && out.trace.len() <= 50;
    Ok((
        ok,
        format!(
            "{} rows, monotone {monotone}, bound below accurate {bounded}",
            out.trace.len()
        ),
    ))
}

/// Runs every check on every seed.
pub fn run_checks(cfg: &ExperimentConfig) -> std::result::Result<Vec<CheckResult>, CliError> {
    let mut results = vec![check(
        "spectral_round_trip",
        None,
        spectral_round_trip(&cfg.rf, &cfg.solver.root),
    )];
    for &seed in &cfg.seeds {
        let ch = gen_channels(&cfg.geometry, &cfg.rf, seed).map_err(CliError::Config)?;
        let s = Some(seed);
        results.push(check("closed_form_sinr", s, closed_form_sinr(&ch, &cfg.rf)));
        results.push(check("mmse_attains_sinr", s, mmse_attains(&ch, &cfg.rf)));
        results.push(check(
            "woodbury_vs_dense",
            s,
            woodbury_vs_dense(&ch, &cfg.rf),
        ));
        for (name, passed, detail) in curve_shape(&ch, &cfg.rf) {
            results.push(CheckResult {
                name,
                seed: s,
                passed,
                detail,
            });
        }
        results.push(check(
            "pt_corner_grid",
            s,
            pt_corner_grid(&ch, &cfg.rf, &cfg.solver.root),
        ));
        results.push(check(
            "bd_corner_mrt",
            s,
            bd_corner(&ch, &cfg.rf, &cfg.solver.root),
        ));
        results.push(check("sca_trace", s, sca_trace(&ch, cfg)));
    }
    Ok(results)
}

/// Runs the checks and renders them as a table and CSV.
pub fn cmd_validate(
    cfg: &ExperimentConfig,
) -> std::result::Result<(CommandOutput, Vec<CheckResult>), CliError> {
    let results = run_checks(cfg)?;
    let mut report = String::new();
    let _ = writeln!(
        report,
        "{:<22} {:>6}  {:<6} detail",
        "check", "seed", "status"
    );
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let seed = r.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
            let status = if r.passed { "pass" } else { "FAIL" };
            let _ = writeln!(
                report,
                "{:<22} {:>6}  {:<6} {}",
                r.name, seed, status, r.detail
            );
            vec![
                r.name.to_string(),
                seed,
                status.to_string(),
                r.detail.clone(),
            ]
        })
        .collect();
    let output = CommandOutput {
        name: "validate",
        csv: csv_string(&["check", "seed", "status", "detail"], &rows),
        report,
        witnesses: None,
    };
    Ok((output, results))
}
