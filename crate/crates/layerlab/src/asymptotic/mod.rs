//! The layer ansatz `u_{k,ε} = H(ζ − Φ) + Σ_{i≤k} ε^i h_i(y, ζ − Φ)` with
//! `Φ = Σ_{i<k} ε^i Φ_i(y)`, built order by order from solvability
//! conditions of `L₀h_N = Φ_{N−1} b (1 − H²) + 𝔉_N`.
//!
//! `𝔉_1 = −κH′ + s b (1 − H²)` is written in closed form. Higher `𝔉_N` are
//! extracted numerically: the residual of the order-`N−1` ansatz (with
//! `Φ_{N−1} = 0`) is divided by `ε^N` on a halving ladder of `ε` and
//! extrapolated to `ε = 0`.

pub mod eigenpair;
pub mod extend;
pub mod order;
pub mod residual;
pub mod table;

use crate::error::{Error, Result};
use crate::geometry::{normal_taylor, CoefficientField, FermiChart, InterfaceSpec, NormalTaylor};
use crate::numerics::interp::neville;
use crate::profile::{heteroclinic, FredholmSolver, LineGrid, ProfileTable, Stencil};
use rayon::prelude::*;
use residual::{Evaluator, Terms};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use table::{InterfaceDiff, ShiftDerivs, Table, TableDerivs};

pub use eigenpair::ApproxEigenpair;
pub use extend::ExtendedSolution;
pub use order::{residual_order_study, OrderStudy};

/// Tolerance on solvability defects of the corrector equations.
pub const DEFECT_TOL: f64 = 1e-8;
/// Largest admissible change of an extracted coefficient between ladders.
pub const LADDER_DRIFT_TOL: f64 = 1e-4;

/// Which sign of the curvature enters the first-order equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureSign {
    /// Mean curvature with respect to `+ζ`, the sign that yields `O(ε²)` residuals.
    #[default]
    Calibrated,
    /// The opposite sign; kept to demonstrate the loss of one order.
    Flipped,
}

#[derive(Debug, Clone)]
pub struct AnsatzConfig {
    pub order: usize,
    pub line: LineGrid,
    pub stencil: Stencil,
    pub ladder_start: f64,
    pub ladder_len: usize,
    pub curvature_sign: CurvatureSign,
    /// Cutoff exponent `γ ∈ (0, 1)` of the global extension.
    pub gamma: f64,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            order: 2,
            line: LineGrid::default(),
            stencil: Stencil::Fourth,
            ladder_start: 0.02,
            ladder_len: 4,
            curvature_sign: CurvatureSign::Calibrated,
            gamma: 0.7,
        }
    }
}

impl AnsatzConfig {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.order) {
            return Err(Error::InvalidInput(format!(
                "ansatz order {} outside 1..=4",
                self.order
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidInput(format!(
                "cutoff exponent {} outside (0, 1)",
                self.gamma
            )));
        }
        if self.ladder_len < 2 || !(self.ladder_start > 0.0) {
            return Err(Error::InvalidInput("extraction ladder needs ≥ 2 positive steps".into()));
        }
        Ok(())
    }
}

/// `Φ₀ = κ / (√2 b)`, the shift that makes the `h₁` equation solvable.
pub fn compute_phi0(kappa: &[f64], b: &[f64]) -> Vec<f64> {
    kappa.iter().zip(b).map(|(k, b)| k / (SQRT_2 * b)).collect()
}

/// `b Φ_{N−1} = −∫H′𝔉_N / ∫H′(1 − H²)`, quadratures on the profile grid.
pub fn compute_phi_next(f: &Table, b: &[f64], profile: &ProfileTable) -> Vec<f64> {
    let denom = profile.integrals().hp_one_minus_h2;
    (0..f.ny).map(|j| -profile.project(f.row(j)) / (denom * b[j])).collect()
}

/// Right side `Φ b (1 − H²) + 𝔉` of the corrector equation on row `j`.
fn corrector_rhs(profile: &ProfileTable, phi: f64, b: f64, f: &[f64]) -> Vec<f64> {
    profile
        .one_minus_h2
        .iter()
        .zip(f)
        .map(|(w, fi)| phi * b * w + fi)
        .collect()
}

/// Solves `L₀h = Φ b(1 − H²) + 𝔉` row by row and checks solvability.
pub fn solve_corrector(solver: &FredholmSolver, phi: &[f64], b: &[f64], f: &Table) -> Result<(Table, f64)> {
    let profile = solver.profile();
    let rows: Vec<(Vec<f64>, f64)> = (0..f.ny)
        .into_par_iter()
        .map(|j| {
            let rhs = corrector_rhs(profile, phi[j], b[j], f.row(j));
            let sol = solver.solve(&rhs)?;
            if sol.defect.abs() >= DEFECT_TOL {
                return Err(Error::SolvabilityViolation {
                    defect: sol.defect,
                    node: j,
                });
            }
            Ok((sol.u, sol.multiplier))
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().fold(0.0_f64, |m, r| m.max(r.1.abs()));
    Ok((Table::from_rows(rows.into_iter().map(|r| r.0).collect()), worst))
}

/// `𝔉_1 = −κH′ + s b (1 − H²)`.
pub fn first_order_source(profile: &ProfileTable, kappa: &[f64], b: &[f64]) -> Table {
    Table::from_rows(
        kappa
            .iter()
            .zip(b)
            .map(|(k, bj)| {
                (0..profile.grid.n)
                    .map(|i| -k * profile.dh[i] + profile.s[i] * bj * profile.one_minus_h2[i])
                    .collect()
            })
            .collect(),
    )
}

/// `h₁` from `L₀h₁ = −κH′ + (s + Φ₀) b (1 − H²)`.
pub fn solve_h1(solver: &FredholmSolver, kappa: &[f64], b: &[f64], phi0: &[f64]) -> Result<Table> {
    let f = first_order_source(solver.profile(), kappa, b);
    Ok(solve_corrector(solver, phi0, b, &f)?.0)
}

/// Numerical `𝔉_N` from the residual of the partial ansatz `terms`
/// (which must hold `Φ_0..Φ_{N−2}` and `h_1..h_{N−1}`).
pub fn extract_fn(eval: &Evaluator, terms: &Terms, n: usize, ladder_start: f64, ladder_len: usize) -> Result<Table> {
    if n < 1 || terms.h.len() + 1 != n || terms.phi.len() + 1 != n {
        return Err(Error::InvalidInput(format!("partial ansatz does not match order {n}")));
    }
    let ny = eval.chart.n_y();
    let ns = eval.s.len();
    let eps: Vec<f64> = (0..=ladder_len).map(|m| ladder_start / 2f64.powi(m as i32)).collect();
    let scaled: Vec<Table> = eps
        .iter()
        .map(|&e| {
            let scale = e.powi(n as i32);
            let rows = (0..ny)
                .into_par_iter()
                .map(|j| {
                    (0..ns)
                        .map(|i| eval.residual(terms, j, i, e) / scale)
                        .collect::<Vec<_>>()
                })
                .collect();
            Table::from_rows(rows)
        })
        .collect();
    let mut out = Table::zeros(ny, ns);
    let mut drift = 0.0_f64;
    let mut q = vec![0.0; eps.len()];
    for idx in 0..ny * ns {
        for (m, t) in scaled.iter().enumerate() {
            q[m] = t.data[idx];
        }
        let a = neville(&eps[..ladder_len], &q[..ladder_len], 0.0);
        let b = neville(&eps[1..], &q[1..], 0.0);
        drift = drift.max((a - b).abs());
        out.data[idx] = -a;
    }
    // Boundary nodes carry Dirichlet data only; their extrapolated values are roundoff.
    for j in 0..ny {
        let row = out.row_mut(j);
        row[0] = 0.0;
        row[ns - 1] = 0.0;
    }
    if drift > LADDER_DRIFT_TOL {
        return Err(Error::ExtrapolationUnstable { drift });
    }
    Ok(out)
}

/// Order-`k` layer ansatz with all solvability data.
#[derive(Debug, Clone)]
pub struct LayerAnsatz {
    pub order: usize,
    pub config: AnsatzConfig,
    pub eval: Evaluator,
    pub taylor: NormalTaylor,
    pub profile: ProfileTable,
    /// Curvature entering the first-order equations (after the sign choice).
    pub kappa: Vec<f64>,
    /// `Φ_0..Φ_{k−1}`.
    pub phi: Vec<Vec<f64>>,
    /// `h_1..h_k`.
    pub h: Vec<Table>,
    /// Largest bordered-system multiplier per order (discretization size).
    pub multipliers: Vec<f64>,
    ydiff: InterfaceDiff,
    terms: Terms,
}

impl LayerAnsatz {
    /// Runs the recursion `(Φ₀, h₁), (Φ₁, h₂), …` up to `config.order`.
    pub fn assemble(chart: FermiChart, field: CoefficientField, config: &AnsatzConfig) -> Result<Self> {
        config.validate()?;
        let k = config.order;
        let taylor = normal_taylor(&field, &chart, (k + 1).min(6))?;
        let profile = heteroclinic(config.line);
        let solver = FredholmSolver::new(&profile, config.stencil)?;
        let ydiff = InterfaceDiff::new(chart.n_y(), chart.interface.length());
        let hs = profile.spacing();
        let b = taylor.b().to_vec();
        let sign = match config.curvature_sign {
            CurvatureSign::Calibrated => 1.0,
            CurvatureSign::Flipped => -1.0,
        };
        let kappa: Vec<f64> = chart.kappa.iter().map(|c| sign * c).collect();
        let eval = Evaluator {
            chart,
            field,
            s: profile.s.clone(),
        };

        let phi0 = compute_phi0(&kappa, &b);
        let f1 = first_order_source(&profile, &kappa, &b);
        let (h1, m1) = solve_corrector(&solver, &phi0, &b, &f1)?;
        let mut phi = vec![phi0];
        let mut h = vec![h1];
        let mut multipliers = vec![m1];
        let mut terms = Terms {
            phi: vec![ShiftDerivs::new(&phi[0], &ydiff)],
            h: vec![TableDerivs::new(&h[0], hs, config.stencil, &ydiff)],
        };
        let fold = match eval.chart.interface {
            InterfaceSpec::Circle { radius, .. } => radius,
            _ => f64::INFINITY,
        };
        for n in 2..=k {
            // Partial ansatz: Φ_{n−1} is not yet known and stays zero.
            let partial = Terms {
                phi: terms.phi.clone(),
                h: terms.h.clone(),
            };
            let reach = profile.grid.half_length + partial_shift_bound(&phi) + 1.0;
            let e0 = config.ladder_start.min(0.5 * fold / reach);
            let fnn = extract_fn(&eval, &partial, n, e0, config.ladder_len)?;
            let phin = compute_phi_next(&fnn, &b, &profile);
            let (hn, mn) = solve_corrector(&solver, &phin, &b, &fnn)?;
            terms.phi.push(ShiftDerivs::new(&phin, &ydiff));
            terms.h.push(TableDerivs::new(&hn, hs, config.stencil, &ydiff));
            phi.push(phin);
            h.push(hn);
            multipliers.push(mn);
        }
        Ok(Self {
            order: k,
            config: config.clone(),
            eval,
            taylor,
            profile,
            kappa,
            phi,
            h,
            multipliers,
            ydiff,
            terms,
        })
    }

    pub fn chart(&self) -> &FermiChart {
        &self.eval.chart
    }

    pub fn field(&self) -> &CoefficientField {
        &self.eval.field
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn interface_diff(&self) -> &InterfaceDiff {
        &self.ydiff
    }

    /// `μ̄ = √2 b(y)`.
    pub fn mu_bar(&self) -> Vec<f64> {
        self.taylor.b().iter().map(|b| SQRT_2 * b).collect()
    }

    /// Scaled residual `𝔖_ε(u_{k,ε})` on the `(y, s)` grid.
    pub fn residual_table(&self, eps: f64) -> Table {
        let ny = self.eval.chart.n_y();
        let ns = self.eval.s.len();
        let rows = (0..ny)
            .into_par_iter()
            .map(|j| (0..ns).map(|i| self.eval.residual(&self.terms, j, i, eps)).collect())
            .collect();
        Table::from_rows(rows)
    }

    /// Sup-norm of the residual over nodes with `|ζ| ≤ zeta_max`.
    pub fn residual_sup(&self, eps: f64, zeta_max: f64) -> f64 {
        let t = self.residual_table(eps);
        self.masked_sup(&t, eps, zeta_max)
    }

    fn masked_sup(&self, t: &Table, eps: f64, zeta_max: f64) -> f64 {
        let limit = zeta_max.min(self.profile.grid.half_length - 2.0);
        let mut worst = 0.0_f64;
        for j in 0..t.ny {
            let shift = self.terms.shift(j, eps).v;
            for i in 0..t.ns {
                if (self.eval.s[i] + shift).abs() <= limit && self.eval.s[i].abs() <= limit {
                    worst = worst.max(t.get(j, i).abs());
                }
            }
        }
        worst
    }

    /// Largest `|ζ|` (scaled) at which the residual is meaningful for `eps`.
    pub fn zeta_limit(&self, eps: f64) -> f64 {
        (self.eval.chart.tube_halfwidth / eps).min(self.profile.grid.half_length - 2.0)
    }

    /// Largest `|∫h_i H′| / ‖h_i‖∞` over rows, for every stored correction.
    pub fn normalization_defects(&self) -> Vec<f64> {
        self.h
            .iter()
            .map(|t| {
                (0..t.ny)
                    .map(|j| self.profile.project(t.row(j)).abs() / t.max_abs().max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Fitted polynomial degree `d` of the tail `|h_i| ~ s^d e^{−√2|s|}` and
    /// the bound `max |h_i| e^{√2|s|} / (1 + |s|^d)` over `|s| ≤ S − 2`.
    pub fn decay_profile(&self, i: usize, degree: Option<f64>) -> (f64, f64) {
        decay_profile(&self.h[i - 1], &self.profile, degree)
    }
}

fn partial_shift_bound(phi: &[Vec<f64>]) -> f64 {
    phi.iter().map(|p| p.iter().fold(0.0_f64, |m, v| m.max(v.abs()))).sum()
}

/// See [`LayerAnsatz::decay_profile`].
pub fn decay_profile(t: &Table, profile: &ProfileTable, degree: Option<f64>) -> (f64, f64) {
    let s = &profile.s;
    let envelope = |i: usize| (0..t.ny).map(|j| t.get(j, i).abs()).fold(0.0, f64::max) * (SQRT_2 * s[i].abs()).exp();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for i in 0..s.len() {
        if (6.0..=14.0).contains(&s[i]) {
            lx.push(s[i].ln());
            ly.push(envelope(i).max(1e-300).ln());
        }
    }
    let fitted = crate::numerics::linear_fit(&lx, &ly).0;
    let d = degree.unwrap_or(fitted.max(0.0).ceil());
    let limit = profile.grid.half_length - 2.0;
    let bound = (0..s.len())
        .filter(|&i| s[i].abs() <= limit)
        .map(|i| envelope(i) / (1.0 + s[i].abs().powf(d)))
        .fold(0.0, f64::max);
    (fitted, bound)
}
