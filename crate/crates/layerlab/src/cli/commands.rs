//! The batch commands. Each writes a run directory and returns its summary;
//! numerical failures are recorded in the summary instead of aborting.

use super::artifact::{build_report, Check, Report, RunArtifact, RunSummary};
use super::config::{ExperimentConfig, SolveBlock, SpectrumBlock, WeylBlock};
use crate::asymptotic::{residual_order_study, CurvatureSign, LayerAnsatz, OrderStudy};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, InterfaceSpec};
use crate::pde::{fixed_point_solve, newton_solve, Problem};
use crate::spectrum::{
    ansatz_on_grid, decompose_eigenfunction, eig_derivative, k_spectrum, linearized_spectrum, match_predictions,
    near_zero_window, sample_weight, scan_eps, weight_extension, DRIFT_CONSTANT,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::path::Path;

fn conclude(run: RunArtifact, outcome: Result<()>) -> Result<RunSummary> {
    match outcome {
        Ok(()) => run.finish(None),
        Err(e) if e.is_config() => {
            run.finish(Some(&e))?;
            Err(e)
        }
        Err(e) => run.finish(Some(&e)),
    }
}

fn sign_value(s: CurvatureSign) -> f64 {
    match s {
        CurvatureSign::Calibrated => 1.0,
        CurvatureSign::Flipped => -1.0,
    }
}

fn assemble(cfg: &ExperimentConfig, order: usize, sign: CurvatureSign) -> Result<LayerAnsatz> {
    LayerAnsatz::assemble(
        cfg.chart(order)?,
        cfg.coefficient_field()?,
        &cfg.ansatz_config(order, sign),
    )
}

fn problem(cfg: &ExperimentConfig) -> Result<Problem> {
    Problem::new(cfg.geometry.domain, cfg.grid()?, cfg.coefficient_field()?)
}

/// Residual-order study for every `(curvature sign, k)` cell.
pub fn cmd_approx(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let mut run = RunArtifact::create(out, "approx", cfg)?;
    let outcome = approx_body(cfg, &mut run);
    conclude(run, outcome)
}

#[derive(Serialize)]
struct Cell {
    curvature_sign: CurvatureSign,
    order: usize,
    study: Option<OrderStudy>,
    error: Option<String>,
}

fn approx_body(cfg: &ExperimentConfig, run: &mut RunArtifact) -> Result<()> {
    let keys: Vec<(CurvatureSign, usize)> = cfg
        .numerics
        .curvature_signs
        .iter()
        .flat_map(|&s| cfg.numerics.orders.iter().map(move |&k| (s, k)))
        .collect();
    let results: Vec<Result<OrderStudy>> = keys
        .par_iter()
        .map(|&(s, k)| residual_order_study(&assemble(cfg, k, s)?, &cfg.numerics.eps))
        .collect();
    let (mut rows, mut slopes, mut cells) = (Vec::new(), Vec::new(), Vec::new());
    let mut first_error = None;
    for (&(s, k), r) in keys.iter().zip(results) {
        match r {
            Ok(st) => {
                for (i, e) in st.eps.iter().enumerate() {
                    rows.push(vec![
                        sign_value(s),
                        k as f64,
                        *e,
                        st.residuals[i],
                        st.eigen_residuals[i],
                    ]);
                }
                slopes.push(vec![sign_value(s), k as f64, st.slope, st.eigen_slope, st.zeta_max]);
                let target = (k + 1) as f64;
                let check = match s {
                    CurvatureSign::Calibrated => Check::new(
                        format!("residual order k={k}"),
                        (st.slope - target).abs() <= 0.3,
                        st.slope,
                        format!("{target} ± 0.3"),
                    ),
                    CurvatureSign::Flipped => Check::new(
                        format!("flipped curvature k={k}"),
                        st.slope <= k as f64 + 0.3,
                        st.slope,
                        format!("≤ {}", k as f64 + 0.3),
                    ),
                };
                run.check(check);
                cells.push(Cell {
                    curvature_sign: s,
                    order: k,
                    study: Some(st),
                    error: None,
                });
            }
            Err(e) if e.is_config() => return Err(e),
            Err(e) => {
                run.log(format!("{s:?} k={k}: {e}"));
                cells.push(Cell {
                    curvature_sign: s,
                    order: k,
                    study: None,
                    error: Some(e.to_string()),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    run.write_csv(
        "residuals.csv",
        &["curvature_sign", "k", "eps", "residual", "eigen_residual"],
        &rows,
    )?;
    run.write_csv(
        "slopes.csv",
        &["curvature_sign", "k", "slope", "eigen_slope", "zeta_max"],
        &slopes,
    )?;
    run.write_json("studies.json", &cells)?;
    first_error.map_or(Ok(()), Err)
}

/// Newton (and optionally fixed-point) solves from the extended ansatz.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let mut run = RunArtifact::create(out, "solve", cfg)?;
    let outcome = solve_body(cfg, &mut run);
    conclude(run, outcome)
}

fn solve_body(cfg: &ExperimentConfig, run: &mut RunArtifact) -> Result<()> {
    let block = cfg.solve.clone().unwrap_or_default();
    let SolveBlock {
        order,
        fixed_point,
        margin,
        write_solution,
    } = block;
    let ansatz = assemble(cfg, order, CurvatureSign::Calibrated)?;
    let problem = problem(cfg)?;
    let phi0 = ansatz.phi[0].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut history = Vec::new();
    let mut reports = Vec::new();
    let mut first_error = None;
    for (idx, &eps) in cfg.numerics.eps.iter().enumerate() {
        let u0 = ansatz_on_grid(&ansatz, &problem, eps);
        let newton = match newton_solve(&problem, &u0, eps, &cfg.numerics.newton) {
            Ok(r) => r,
            Err(e) => {
                run.check(Check::new(format!("newton ε={eps}"), false, f64::NAN, e.to_string()));
                reports.push(json!({ "eps": eps, "error": e.to_string() }));
                first_error.get_or_insert(e);
                continue;
            }
        };
        for (it, res) in newton.residuals.iter().enumerate() {
            let step = if it > 0 { newton.steps[it - 1] } else { 0.0 };
            let damping = if it > 0 { newton.damping[it - 1] } else { 0.0 };
            history.push(vec![eps, it as f64, *res, step, damping]);
        }
        let last = *newton.residuals.last().unwrap();
        run.check(Check::new(
            format!("newton ε={eps}"),
            last < 1e-11 && newton.iterations <= 8,
            last,
            "residual < 1e-11 within 8 iterations",
        ));
        let shape = problem.layer_shape(&newton.solution, margin)?;
        run.check(Check::new(
            format!("outer values ε={eps}"),
            shape.outer_dev <= 3.0 * eps,
            shape.outer_dev,
            format!("≤ {:.4e}", 3.0 * eps),
        ));
        let bound = 2.0 * eps * (phi0 + eps);
        run.check(Check::new(
            format!("zero set ε={eps}"),
            shape.zero_set_dist <= bound,
            shape.zero_set_dist,
            format!("≤ {bound:.4e}"),
        ));
        let mut fp_json = serde_json::Value::Null;
        if fixed_point {
            match fixed_point_solve(&problem, &u0, eps, &cfg.numerics.fixed_point) {
                Ok(fp) => {
                    let diff = fp
                        .solution
                        .iter()
                        .zip(&newton.solution)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    run.check(Check::new(
                        format!("fixed point ε={eps}"),
                        diff <= 1e-9,
                        diff,
                        "agreement ≤ 1e-9",
                    ));
                    fp_json = json!({ "report": fp, "max_difference": diff });
                }
                Err(e) => {
                    run.check(Check::new(
                        format!("fixed point ε={eps}"),
                        false,
                        f64::NAN,
                        e.to_string(),
                    ));
                    fp_json = json!({ "error": e.to_string() });
                }
            }
        }
        if write_solution {
            let rows: Vec<Vec<f64>> = problem
                .disc
                .nodes
                .iter()
                .zip(&newton.solution)
                .map(|(p, u)| vec![p[0], p[1], *u])
                .collect();
            run.write_csv(&format!("solution_{idx}.csv"), &["x0", "x1", "u"], &rows)?;
        }
        reports.push(json!({
            "eps": eps,
            "newton": newton,
            "shape": shape,
            "phi0_sup": phi0,
            "zero_set_bound": bound,
            "fixed_point": fp_json,
        }));
    }
    run.write_csv(
        "convergence.csv",
        &["eps", "iteration", "residual", "step", "damping"],
        &history,
    )?;
    run.write_json("solve.json", &reports)?;
    first_error.map_or(Ok(()), Err)
}

fn interface_spectrum(
    cfg: &ExperimentConfig,
    problem: &Problem,
    block: &SpectrumBlock,
) -> Result<crate::spectrum::KSpectrum> {
    let field = &problem.field;
    let (ny, _) = problem.disc.shape();
    let nodes = match field.interface {
        InterfaceSpec::Point { .. } => 1,
        _ => block.nodes.unwrap_or(if ny > 1 { ny } else { 4 * block.modes }),
    };
    let (_, b) = sample_weight(field, nodes)?;
    let modes = if nodes == 1 { 1 } else { block.modes.min(nodes / 4) };
    k_spectrum(&field.interface, cfg.geometry.domain.dimension(), &b, modes)
}

/// Near-zero spectrum, prediction matching, eigenfunction structure and ε-derivatives.
pub fn cmd_spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let mut run = RunArtifact::create(out, "spectrum", cfg)?;
    let outcome = spectrum_body(cfg, &mut run);
    conclude(run, outcome)
}

fn spectrum_body(cfg: &ExperimentConfig, run: &mut RunArtifact) -> Result<()> {
    let block = cfg.spectrum.clone().unwrap_or_default();
    let ansatz = assemble(cfg, block.order, CurvatureSign::Calibrated)?;
    let problem = problem(cfg)?;
    let weight = weight_extension(&problem)?;
    let kspec = interface_spectrum(cfg, &problem, &block)?;
    let pair = if block.decompose {
        Some(ansatz.approx_eigenpair()?)
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut devs = Vec::new();
    for &eps in &cfg.numerics.eps {
        let u = ansatz_on_grid(&ansatz, &problem, eps);
        let spec = linearized_spectrum(&problem, &u, eps, &weight, 5, Some(near_zero_window(eps)))?;
        let m = match_predictions(&spec, &kspec, eps)?;
        for (i, (c, p)) in m.pairs.iter().enumerate() {
            rows.push(vec![eps, i as f64, *c, *p, c - p]);
        }
        let dev = m.max_dev_first(5);
        devs.push((eps, dev));
        run.check(Check::new(
            format!("small-eigenvalue law ε={eps}"),
            dev <= 5.0 * eps * eps,
            dev,
            format!("≤ {:.4e}", 5.0 * eps * eps),
        ));
        let mut entry = json!({ "eps": eps, "spectrum": spec, "match": m });
        if let Some(pair) = &pair {
            let i = spec.nearest_zero();
            let d = decompose_eigenfunction(&problem, &ansatz, pair, &kspec, &spec.vectors[i], eps)?;
            run.check(Check::new(
                format!("φ⊥ ratio ε={eps}"),
                d.perp_h1_ratio <= eps,
                d.perp_h1_ratio,
                format!("≤ {eps}"),
            ));
            run.check(Check::new(
                format!("high-mode mass ε={eps}"),
                d.high_mass <= 0.2,
                d.high_mass,
                "≤ 0.2",
            ));
            entry["decomposition"] = serde_json::to_value(&d).unwrap();
        }
        if let Some(delta) = block.derivative_step {
            let dr = eig_derivative(&problem, &ansatz, &weight, eps, delta, block.derivative_modes)?;
            for (j, md) in dr.modes.iter().enumerate() {
                run.check(Check::new(
                    format!("Kato bounds ε={eps} mode {j}"),
                    md.within(dr.slack),
                    md.fd,
                    format!(
                        "[{:.6} − {s:.2e}, {:.6} + {s:.2e}]",
                        md.kato_lo,
                        md.kato_hi,
                        s = dr.slack
                    ),
                ));
            }
            if let Some(near) = dr.modes.first() {
                run.check(Check::new(format!("drift sign ε={eps}"), near.fd < 0.0, near.fd, "< 0"));
                let rel = (near.fd - DRIFT_CONSTANT).abs() / DRIFT_CONSTANT.abs();
                run.check(Check::new(
                    format!("drift vs c ε={eps}"),
                    rel <= 0.2,
                    rel,
                    "relative deviation ≤ 0.2",
                ));
            }
            entry["derivatives"] = serde_json::to_value(&dr).unwrap();
        }
        reports.push(entry);
    }
    if devs.len() >= 2 && devs[1].1 > 0.0 {
        let ratio = devs[0].1 / devs[1].1;
        run.check(Check::new(
            format!("deviation ratio ε={} / ε={}", devs[0].0, devs[1].0),
            (3.0..=5.0).contains(&ratio),
            ratio,
            "[3, 5]",
        ));
    }
    run.write_csv(
        "eigenvalues.csv",
        &["eps", "index", "computed", "predicted", "deviation"],
        &rows,
    )?;
    run.write_csv(
        "interface_spectrum.csv",
        &["index", "lambda"],
        &kspec
            .values
            .iter()
            .enumerate()
            .map(|(j, l)| vec![j as f64, *l])
            .collect::<Vec<_>>(),
    )?;
    run.write_json("spectrum.json", &reports)?;
    Ok(())
}

/// ε-scan of positive counts, crossings and certified gaps.
pub fn cmd_scan(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let mut run = RunArtifact::create(out, "scan", cfg)?;
    let outcome = scan_body(cfg, &mut run);
    conclude(run, outcome)
}

fn scan_body(cfg: &ExperimentConfig, run: &mut RunArtifact) -> Result<()> {
    let opts = cfg.scan.clone().unwrap_or_default();
    let block = cfg.spectrum.clone().unwrap_or_default();
    let ansatz = assemble(cfg, block.order, CurvatureSign::Calibrated)?;
    let problem = problem(cfg)?;
    let weight = weight_extension(&problem)?;
    let kspec = interface_spectrum(cfg, &problem, &block)?;
    let r = scan_eps(&problem, &ansatz, &weight, &kspec, &opts)?;
    run.write_csv(
        "counts.csv",
        &["eps", "positive_count"],
        &r.eps
            .iter()
            .zip(&r.counts)
            .map(|(e, c)| vec![*e, *c as f64])
            .collect::<Vec<_>>(),
    )?;
    let nan = f64::NAN;
    run.write_csv(
        "crossings.csv",
        &["eps", "lo", "hi", "jump", "mode", "predicted", "rel_error"],
        &r.crossings
            .iter()
            .map(|c| {
                vec![
                    c.eps,
                    c.bracket.0,
                    c.bracket.1,
                    c.jump as f64,
                    c.mode.map_or(nan, |m| m as f64),
                    c.predicted.unwrap_or(nan),
                    c.rel_error.unwrap_or(nan),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    run.write_csv(
        "gaps.csv",
        &[
            "block_lo",
            "block_hi",
            "lo",
            "hi",
            "midpoint",
            "min_abs",
            "bound",
            "certified",
        ],
        &r.gaps
            .iter()
            .map(|g| {
                vec![
                    g.block.0,
                    g.block.1,
                    g.interval.0,
                    g.interval.1,
                    g.midpoint,
                    g.min_abs,
                    g.bound,
                    g.certified as u8 as f64,
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    run.check(Check::new(
        "resonances crossed",
        r.crossings.len() >= 2,
        r.crossings.len() as f64,
        "≥ 2",
    ));
    for c in &r.crossings {
        let rel = c.rel_error.unwrap_or(f64::INFINITY);
        run.check(Check::new(
            format!("crossing ε={:.6}", c.eps),
            rel <= 0.1,
            rel,
            "relative error ≤ 0.1",
        ));
    }
    let expected = -0.5 * (cfg.geometry.domain.dimension() as f64 - 1.0);
    run.check(Check::new(
        "positive-count slope",
        (r.count_exponent - expected).abs() <= 0.15,
        r.count_exponent,
        format!("{expected} ± 0.15"),
    ));
    for g in &r.gaps {
        run.check(Check::new(
            format!("gap in ({:.4}, {:.4})", g.block.0, g.block.1),
            g.certified && g.min_abs > 0.0,
            g.min_abs,
            format!("≥ {:.4e}", g.bound),
        ));
    }
    run.write_json("scan.json", &r)?;
    Ok(())
}

/// Weyl-law fits for the configured weight and any extra ones.
pub fn cmd_weyl(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let mut run = RunArtifact::create(out, "weyl", cfg)?;
    let outcome = weyl_body(cfg, &mut run);
    conclude(run, outcome)
}

fn weyl_body(cfg: &ExperimentConfig, run: &mut RunArtifact) -> Result<()> {
    let block: WeylBlock = cfg.weyl.clone().unwrap_or_default();
    let interface = cfg.geometry.interface;
    let dim = cfg.geometry.domain.dimension();
    let mut fields = vec![cfg.field.clone()];
    fields.extend(block.extra_fields.iter().cloned());
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (i, spec) in fields.iter().enumerate() {
        let field = CoefficientField::new(spec.clone(), interface)?;
        let (_, b) = sample_weight(&field, block.nodes)?;
        let k = k_spectrum(&interface, dim, &b, block.modes)?;
        for (j, l) in k.values.iter().enumerate() {
            rows.push(vec![i as f64, j as f64, *l]);
        }
        let fit = k
            .weyl
            .ok_or_else(|| Error::InvalidInput("too few positive eigenvalues for a Weyl fit".into()))?;
        run.check(Check::new(
            format!("Weyl exponent field {i}"),
            (fit.exponent - fit.expected).abs() <= 0.1,
            fit.exponent,
            format!("{} ± 0.1", fit.expected),
        ));
        fits.push(json!({ "field": spec, "fit": fit }));
    }
    run.write_csv("weyl.csv", &["field", "index", "lambda"], &rows)?;
    run.write_json("weyl.json", &fits)?;
    Ok(())
}

/// Aggregates earlier runs; writes `report.json` when the list is non-empty.
pub fn cmd_report(out: &Path, ids: &[String]) -> Result<Report> {
    let report = build_report(out, ids)?;
    if !ids.is_empty() {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(out.join("report.json"), text)?;
    }
    Ok(report)
}
