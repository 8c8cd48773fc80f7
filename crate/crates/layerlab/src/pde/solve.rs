//! Damped Newton, the frozen-Jacobian fixed-point map and ε-continuation.

use super::Problem;
use crate::error::{Error, Result};
use crate::numerics::eigen::{eig_near_shift_factored, ShiftInvertOptions};
use crate::numerics::norm_inf;
use crate::numerics::sparse::{CsrMatrix, SparseLu};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    /// Absolute tolerance on the residual sup-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub min_damping: f64,
    /// Compute the eigenvalue of `J` nearest zero at every iteration.
    pub singular_check: bool,
    /// `SingularJacobian` when `min |λ| < singular_rel · ‖J‖∞`.
    pub singular_rel: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 20,
            armijo: 1e-4,
            min_damping: 1.0 / 1024.0,
            singular_check: true,
            singular_rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    pub tol: f64,
    /// Stop when successive iterates differ by less than this (sup-norm).
    pub step_tol: f64,
    pub max_iter: usize,
    /// Ratio of successive step norms above which the map is declared non-contractive.
    pub max_ratio: f64,
    pub singular_rel: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            step_tol: 1e-13,
            max_iter: 200,
            max_ratio: 0.9,
            singular_rel: 1e-12,
        }
    }
}

/// History and outcome of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub eps: f64,
    /// Residual sup-norm before each iteration and at the end.
    pub residuals: Vec<f64>,
    /// Sup-norm of each update.
    pub steps: Vec<f64>,
    /// Newton damping factors (empty for the fixed-point map).
    pub damping: Vec<f64>,
    /// Ratios of successive fixed-point step norms.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Eigenvalue of the Jacobian nearest zero (last computed).
    pub min_eig: Option<f64>,
    /// Largest `‖w‖∞` reached by the fixed-point iterates.
    pub ball_radius: Option<f64>,
    #[serde(skip)]
    pub solution: Vec<f64>,
}

fn weighted_norm(w: &[f64], r: &[f64]) -> f64 {
    w.iter().zip(r).map(|(w, r)| w * r * r).sum::<f64>().sqrt()
}

/// `‖J‖∞` of the unweighted Jacobian from its weighted form.
pub(crate) fn operator_scale(a: &CsrMatrix, w: &[f64]) -> f64 {
    (0..a.n)
        .map(|i| (a.row_ptr[i]..a.row_ptr[i + 1]).map(|k| a.val[k].abs()).sum::<f64>() / w[i])
        .fold(0.0, f64::max)
}

fn factor(a: &CsrMatrix, threshold: f64) -> Result<SparseLu> {
    SparseLu::new(a).map_err(|_| Error::SingularJacobian {
        min_eig: 0.0,
        threshold,
    })
}

/// Eigenvalue of the pencil `(A, W)` nearest zero using an existing factorization.
pub fn nearest_zero_eigenvalue(lu: &SparseLu, weights: &[f64]) -> Result<f64> {
    let opts = ShiftInvertOptions {
        count: 1,
        tol: 1e-9,
        ..ShiftInvertOptions::default()
    };
    let eig = eig_near_shift_factored(lu, weights, &opts)?;
    Ok(eig.values[0])
}

fn singular_guard(lu: &SparseLu, a: &CsrMatrix, w: &[f64], rel: f64) -> Result<f64> {
    let threshold = rel * operator_scale(a, w);
    let lambda = nearest_zero_eigenvalue(lu, w)?;
    if lambda.abs() < threshold {
        return Err(Error::SingularJacobian {
            min_eig: lambda,
            threshold,
        });
    }
    Ok(lambda)
}

/// Damped Newton on `ε²Δ_h u − (u − a)(u² − 1) = 0` from `u0`.
pub fn newton_solve(problem: &Problem, u0: &[f64], eps: f64, cfg: &NewtonConfig) -> Result<SolveReport> {
    let w = &problem.disc.weights;
    let mut u = u0.to_vec();
    let mut r = problem.residual(&u, eps)?;
    let mut report = SolveReport {
        eps,
        residuals: vec![norm_inf(&r)],
        steps: Vec::new(),
        damping: Vec::new(),
        ratios: Vec::new(),
        converged: false,
        iterations: 0,
        min_eig: None,
        ball_radius: None,
        solution: Vec::new(),
    };
    for it in 0..cfg.max_iter {
        if report.residuals[it] < cfg.tol {
            report.converged = true;
            break;
        }
        let op = problem.jacobian(&u, eps)?;
        let threshold = cfg.singular_rel * operator_scale(&op.matrix, w);
        let lu = factor(&op.matrix, threshold)?;
        if cfg.singular_check {
            report.min_eig = Some(singular_guard(&lu, &op.matrix, w, cfg.singular_rel)?);
        }
        let rhs: Vec<f64> = r.iter().zip(w).map(|(r, w)| -w * r).collect();
        let du = lu.solve(&rhs);
        if du.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian {
                min_eig: report.min_eig.unwrap_or(0.0),
                threshold,
            });
        }
        let r0 = weighted_norm(w, &r);
        let mut t = 1.0;
        let (trial, rt) = loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + t * d).collect();
            let rt = problem.residual(&trial, eps)?;
            if weighted_norm(w, &rt) <= (1.0 - cfg.armijo * t) * r0 || t <= cfg.min_damping {
                break (trial, rt);
            }
            t *= 0.5;
        };
        report.steps.push(t * norm_inf(&du));
        report.damping.push(t);
        u = trial;
        r = rt;
        report.residuals.push(norm_inf(&r));
        report.iterations = it + 1;
    }
    let last = *report.residuals.last().unwrap();
    report.converged = last < cfg.tol;
    if !report.converged {
        return Err(Error::MaxIterations {
            iterations: report.iterations,
            residual: last,
        });
    }
    report.solution = u;
    Ok(report)
}

/// Picard iteration of `w ↦ −L̂⁻¹[𝔖(û) − (3û − a)w² − w³]` with `L̂` frozen at `û`.
pub fn fixed_point_solve(problem: &Problem, u_hat: &[f64], eps: f64, cfg: &FixedPointConfig) -> Result<SolveReport> {
    let wts = &problem.disc.weights;
    let op = problem.jacobian(u_hat, eps)?;
    let threshold = cfg.singular_rel * operator_scale(&op.matrix, wts);
    let lu = factor(&op.matrix, threshold)?;
    let min_eig = singular_guard(&lu, &op.matrix, wts, cfg.singular_rel)?;
    let s0 = problem.residual(u_hat, eps)?;
    let c: Vec<f64> = u_hat.iter().zip(&problem.a).map(|(u, a)| 3.0 * u - a).collect();
    let mut w = vec![0.0; u_hat.len()];
    let mut report = SolveReport {
        eps,
        residuals: vec![norm_inf(&s0)],
        steps: Vec::new(),
        damping: Vec::new(),
        ratios: Vec::new(),
        converged: false,
        iterations: 0,
        min_eig: Some(min_eig),
        ball_radius: Some(0.0),
        solution: Vec::new(),
    };
    let mut radius = 0.0_f64;
    for it in 0..cfg.max_iter {
        let rhs: Vec<f64> = (0..w.len())
            .map(|i| -wts[i] * (s0[i] - c[i] * w[i] * w[i] - w[i].powi(3)))
            .collect();
        let next = lu.solve(&rhs);
        let step = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if let Some(&prev) = report.steps.last() {
            let ratio = step / prev;
            report.ratios.push(ratio);
            if ratio >= cfg.max_ratio && step > cfg.step_tol {
                return Err(Error::NotContractive { ratio });
            }
        }
        w = next;
        radius = radius.max(norm_inf(&w));
        report.steps.push(step);
        report.iterations = it + 1;
        let u: Vec<f64> = u_hat.iter().zip(&w).map(|(a, b)| a + b).collect();
        let res = norm_inf(&problem.residual(&u, eps)?);
        report.residuals.push(res);
        if step < cfg.step_tol || (res < cfg.tol && step < 1e3 * cfg.step_tol) {
            report.converged = true;
            report.solution = u;
            break;
        }
    }
    report.ball_radius = Some(radius);
    if !report.converged {
        return Err(Error::MaxIterations {
            iterations: report.iterations,
            residual: *report.residuals.last().unwrap(),
        });
    }
    Ok(report)
}

/// Outcome of one continuation step.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStep {
    pub eps: f64,
    /// Whether the step was seeded from the previous solution.
    pub warm: bool,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

/// Newton along `steps + 1` equally spaced values from `eps_from` to
/// `eps_to`, each seeded by the previous solution; after a failure the next
/// step is re-seeded by `seed(ε)`.
pub fn continuation(
    problem: &Problem,
    eps_from: f64,
    eps_to: f64,
    steps: usize,
    seed: &dyn Fn(f64) -> Result<Vec<f64>>,
    cfg: &NewtonConfig,
) -> Result<Vec<ContinuationStep>> {
    if !(eps_from > 0.0 && eps_to > 0.0) {
        return Err(Error::InvalidInput("continuation needs positive ε".into()));
    }
    let eps: Vec<f64> = if eps_from == eps_to || steps == 0 {
        vec![eps_from]
    } else {
        (0..=steps)
            .map(|k| eps_from + (eps_to - eps_from) * k as f64 / steps as f64)
            .collect()
    };
    let mut out = Vec::with_capacity(eps.len());
    let mut prev: Option<Vec<f64>> = None;
    for &e in &eps {
        let warm = prev.is_some();
        let u0 = match prev.take() {
            Some(u) => u,
            None => seed(e)?,
        };
        match newton_solve(problem, &u0, e, cfg) {
            Ok(rep) => {
                prev = Some(rep.solution.clone());
                out.push(ContinuationStep {
                    eps: e,
                    warm,
                    report: Some(rep),
                    error: None,
                });
            }
            Err(err) => out.push(ContinuationStep {
                eps: e,
                warm,
                report: None,
                error: Some(err.to_string()),
            }),
        }
    }
    Ok(out)
}
