use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::json;

use super::{csv_string, num, CliError, CommandOutput, ExperimentConfig};
use crate::channel::{gen_channels, ChannelSet};
use crate::error::{Error, Result};
use crate::individual::{bd_ee_max, pt_ee_max, pt_rate_max, CornerResult};
use crate::pareto::{gamma_for_ee_bd, EEProfile, ParetoPoint, ParetoSolver};
use crate::sca::sca_run;

fn channel_for(cfg: &ExperimentConfig, seed: u64) -> std::result::Result<ChannelSet, CliError> {
    gen_channels(&cfg.geometry, &cfg.rf, seed).map_err(CliError::Config)
}

fn status(err: &Error) -> String {
    format!("error: {err}")
}

/// The three closed-form design points per seed.
pub fn cmd_corners(cfg: &ExperimentConfig) -> std::result::Result<CommandOutput, CliError> {
    let header = [
        "seed",
        "label",
        "p_star_w",
        "p0_w",
        "power_clipped",
        "ee_pt",
        "ee_bd",
        "status",
    ];
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    let mut report = String::new();
    for &seed in &cfg.seeds {
        let ch = channel_for(cfg, seed)?;
        let results = [
            (
                crate::individual::CornerLabel::PtEeMax,
                pt_ee_max(&ch, &cfg.rf, &cfg.solver.root),
            ),
            (
                crate::individual::CornerLabel::BdEeMax,
                bd_ee_max(&ch, &cfg.rf),
            ),
            (
                crate::individual::CornerLabel::PtRateMax,
                pt_rate_max(&ch, &cfg.rf),
            ),
        ];
        for (label, res) in results {
            match res {
                Ok(c) => {
                    rows.push(vec![
                        seed.to_string(),
                        label.to_string(),
                        num(c.p_star),
                        c.root_power.map_or_else(String::new, num),
                        c.power_clipped().to_string(),
                        num(c.ee.ee_pt),
                        num(c.ee.ee_bd),
                        "ok".into(),
                    ]);
                    witnesses.push(json!({"seed": seed, "label": label, "w": c.beamformer()}));
                    let _ = writeln!(
                        report,
                        "seed {seed:>4}  {label:<12} p* = {:.4e} W  EE_PT = {:.4e}  EE_BD = {:.4e} bits/J",
                        c.p_star, c.ee.ee_pt, c.ee.ee_bd
                    );
                }
                Err(e) => {
                    rows.push(vec![
                        seed.to_string(),
                        label.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        status(&e),
                    ]);
                    let _ = writeln!(report, "seed {seed:>4}  {label:<12} {e}");
                }
            }
        }
    }
    Ok(CommandOutput {
        name: "corners",
        csv: csv_string(&header, &rows),
        report,
        witnesses: Some(json!(witnesses)),
    })
}

/// Boundary of one realization: the two corners and one point per profile.
struct SeedBoundary {
    seed: u64,
    corners: Result<(CornerResult, CornerResult)>,
    points: Vec<Result<ParetoPoint>>,
}

fn trace_seed(cfg: &ExperimentConfig, seed: u64) -> std::result::Result<SeedBoundary, CliError> {
    let ch = channel_for(cfg, seed)?;
    let solver = match ParetoSolver::new(&ch, &cfg.rf, cfg.solver) {
        Ok(s) => s,
        Err(e) => {
            return Ok(SeedBoundary {
                seed,
                corners: Err(e.clone()),
                points: cfg.alphas.iter().map(|_| Err(e.clone())).collect(),
            })
        }
    };
    let points = solver.boundary_sweep(&cfg.alphas);
    Ok(SeedBoundary {
        seed,
        corners: Ok((solver.bd_corner().clone(), solver.pt_corner().clone())),
        points,
    })
}

const BOUNDARY_HEADER: [&str; 11] = [
    "seed",
    "point",
    "alpha",
    "eta_star",
    "ee_pt_ray",
    "ee_bd_ray",
    "ee_pt_achieved",
    "ee_bd_achieved",
    "bisection_iters",
    "sca_iters",
    "status",
];

fn corner_row(seed: &str, label: &str, ee: Option<(f64, f64)>, status: String) -> Vec<String> {
    let (pt, bd) = ee.map_or((String::new(), String::new()), |(a, b)| (num(a), num(b)));
    vec![
        seed.into(),
        label.into(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        pt,
        bd,
        "0".into(),
        "0".into(),
        status,
    ]
}

fn point_row(seed: &str, alpha: EEProfile, p: &Result<ParetoPoint>) -> Vec<String> {
    match p {
        Ok(p) => vec![
            seed.into(),
            "boundary".into(),
            num(alpha.alpha()),
            num(p.eta_star),
            num(p.ray_point.ee_pt),
            num(p.ray_point.ee_bd),
            num(p.achieved.ee_pt),
            num(p.achieved.ee_bd),
            p.bisection_iters.to_string(),
            p.sca_total_iters.to_string(),
            "ok".into(),
        ],
        Err(e) => {
            let mut row = vec![seed.to_string(), "boundary".into(), num(alpha.alpha())];
            row.extend(std::iter::repeat_n(String::new(), 7));
            row.push(status(e));
            row
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_status(ok: usize, total: usize) -> String {
    match ok {
        0 => "error: no seed succeeded".into(),
        k if k == total => "ok".into(),
        k => format!("partial {k}/{total}"),
    }
}

/// Pareto boundary per seed, framed by the BD-EE and PT-EE corners. With
/// several seeds, `mean` rows average each column over the seeds that
/// succeeded.
pub fn cmd_boundary(cfg: &ExperimentConfig) -> std::result::Result<CommandOutput, CliError> {
    let runs: Vec<SeedBoundary> = cfg
        .seeds
        .par_iter()
        .map(|&seed| trace_seed(cfg, seed))
        .collect::<std::result::Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    let mut report = String::new();
    for run in &runs {
        let seed = run.seed.to_string();
        match &run.corners {
            Ok((bd, _)) => {
                rows.push(corner_row(
                    &seed,
                    "BD_EE_MAX",
                    Some((bd.ee.ee_pt, bd.ee.ee_bd)),
                    "ok".into(),
                ));
                witnesses
                    .push(json!({"seed": run.seed, "point": "BD_EE_MAX", "w": bd.beamformer()}));
            }
            Err(e) => rows.push(corner_row(&seed, "BD_EE_MAX", None, status(e))),
        }
        for (&alpha, p) in cfg.alphas.iter().zip(&run.points) {
            rows.push(point_row(&seed, alpha, p));
            if let Ok(p) = p {
                witnesses.push(json!({
                    "seed": run.seed,
                    "point": "boundary",
                    "alpha": alpha.alpha(),
                    "w": p.w_star,
                }));
            }
        }
        match &run.corners {
            Ok((_, pt)) => {
                rows.push(corner_row(
                    &seed,
                    "PT_EE_MAX",
                    Some((pt.ee.ee_pt, pt.ee.ee_bd)),
                    "ok".into(),
                ));
                witnesses
                    .push(json!({"seed": run.seed, "point": "PT_EE_MAX", "w": pt.beamformer()}));
            }
            Err(e) => rows.push(corner_row(&seed, "PT_EE_MAX", None, status(e))),
        }
        let ok = run.points.iter().filter(|p| p.is_ok()).count();
        let _ = writeln!(
            report,
            "seed {:>4}: {ok}/{} boundary points",
            run.seed,
            run.points.len()
        );
        for (alpha, p) in cfg.alphas.iter().zip(&run.points) {
            match p {
                Ok(p) => {
                    let _ = writeln!(
                        report,
                        "  alpha {:.3}  eta* = {:.5}  EE_PT = {:.4e}  EE_BD = {:.4e}",
                        alpha.alpha(),
                        p.eta_star,
                        p.achieved.ee_pt,
                        p.achieved.ee_bd
                    );
                }
                Err(e) => {
                    let _ = writeln!(report, "  alpha {:.3}  {e}", alpha.alpha());
                }
            }
        }
    }

    if runs.len() > 1 {
        let total = runs.len();
        let corners: Vec<_> = runs
            .iter()
            .filter_map(|r| r.corners.as_ref().ok())
            .collect();
        let corner_mean = |pick: fn(&(CornerResult, CornerResult)) -> &CornerResult| {
            (!corners.is_empty()).then(|| {
                let pts: Vec<f64> = corners.iter().map(|c| pick(c).ee.ee_pt).collect();
                let bds: Vec<f64> = corners.iter().map(|c| pick(c).ee.ee_bd).collect();
                (mean(&pts), mean(&bds))
            })
        };
        rows.push(corner_row(
            "mean",
            "BD_EE_MAX",
            corner_mean(|c| &c.0),
            mean_status(corners.len(), total),
        ));
        for (i, &alpha) in cfg.alphas.iter().enumerate() {
            let ok: Vec<&ParetoPoint> = runs
                .iter()
                .filter_map(|r| r.points[i].as_ref().ok())
                .collect();
            let col =
                |f: fn(&ParetoPoint) -> f64| mean(&ok.iter().map(|p| f(p)).collect::<Vec<_>>());
            let mut row = vec!["mean".to_string(), "boundary".into(), num(alpha.alpha())];
            if ok.is_empty() {
                row.extend(std::iter::repeat_n(String::new(), 7));
            } else {
                row.extend([
                    num(col(|p| p.eta_star)),
                    num(col(|p| p.ray_point.ee_pt)),
                    num(col(|p| p.ray_point.ee_bd)),
                    num(col(|p| p.achieved.ee_pt)),
                    num(col(|p| p.achieved.ee_bd)),
                    ok.iter()
                        .map(|p| p.bisection_iters)
                        .sum::<usize>()
                        .to_string(),
                    ok.iter()
                        .map(|p| p.sca_total_iters)
                        .sum::<usize>()
                        .to_string(),
                ]);
            }
            row.push(mean_status(ok.len(), total));
            rows.push(row);
        }
        rows.push(corner_row(
            "mean",
            "PT_EE_MAX",
            corner_mean(|c| &c.1),
            mean_status(corners.len(), total),
        ));
    }

    Ok(CommandOutput {
        name: "boundary",
        csv: csv_string(&BOUNDARY_HEADER, &rows),
        report,
        witnesses: Some(json!(witnesses)),
    })
}

/// SCA trace for one `(alpha, eta)` on the first seed.
///
/// `eta` is in the units of the configured profile scaling; it defaults to
/// 99% of the boundary value for `alpha` (itself defaulting to 0.5).
pub fn cmd_convergence(
    cfg: &ExperimentConfig,
    alpha: Option<f64>,
    eta: Option<f64>,
) -> std::result::Result<CommandOutput, CliError> {
    let profile = EEProfile::new(alpha.unwrap_or(0.5)).map_err(CliError::Config)?;
    if let Some(e) = eta {
        if !(e > 0.0 && e.is_finite()) {
            return Err(CliError::Config(Error::InvalidParameter(format!(
                "eta must be positive, got {e}"
            ))));
        }
    }
    let seed = cfg.seeds[0];
    let ch = channel_for(cfg, seed)?;
    let solver = ParetoSolver::new(&ch, &cfg.rf, cfg.solver).map_err(CliError::Solver)?;
    let eta = match eta {
        Some(e) => e,
        None => {
            0.99 * solver
                .pareto_point(profile)
                .map_err(CliError::Solver)?
                .eta_star
        }
    };
    let (t_pt, t_bd) = solver.targets(eta, profile.alpha());
    if t_pt >= solver.pt_corner().ee.ee_pt {
        return Err(CliError::Solver(Error::Infeasible(format!(
            "PT target {t_pt:.6e} bits/J is not below the PT maximum {:.6e}",
            solver.pt_corner().ee.ee_pt
        ))));
    }
    let w0 = solver.initial_point(t_pt).map_err(CliError::Solver)?;
    let out = sca_run(t_pt, &w0, &ch, &cfg.rf, &cfg.solver.sca).map_err(CliError::Solver)?;
    let required = gamma_for_ee_bd(t_bd, &cfg.rf, &cfg.solver.root).map_err(CliError::Solver)?;
    if out.gain_star < required {
        return Err(CliError::Solver(Error::Infeasible(format!(
            "eta = {eta} is infeasible for alpha = {}: best gain {:.6e} < required {:.6e}",
            profile.alpha(),
            out.gain_star,
            required
        ))));
    }

    let header = [
        "iteration",
        "bound_gain",
        "accurate_gain",
        "bound_ee_bd",
        "accurate_ee_bd",
    ];
    let rows: Vec<Vec<String>> = out
        .trace
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.bound_gain),
                num(r.accurate_gain),
                num(r.bound_ee_bd),
                num(r.accurate_ee_bd),
            ]
        })
        .collect();
    let mut report = format!(
        "seed {seed}, alpha {}, eta {eta:.6}: {} rows, EE_BD {:.6e} -> {:.6e} bits/J (target {t_bd:.6e})\n",
        profile.alpha(),
        out.trace.len(),
        out.trace[0].accurate_ee_bd,
        out.trace.last().map_or(f64::NAN, |r| r.accurate_ee_bd),
    );
    for r in &out.trace {
        let _ = writeln!(
            report,
            "  {:>3}  bound {:.8e}  accurate {:.8e}",
            r.iteration, r.bound_ee_bd, r.accurate_ee_bd
        );
    }
    Ok(CommandOutput {
        name: "convergence",
        csv: csv_string(&header, &rows),
        report,
        witnesses: Some(
            json!([{"seed": seed, "alpha": profile.alpha(), "eta": eta, "w": out.w_star}]),
        ),
    })
}
