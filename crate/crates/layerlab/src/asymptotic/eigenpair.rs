//! Approximate principal eigenpair `(ε μ̄, Ψ = H′ + ε H₁)` of the
//! linearization at the layer ansatz.

use super::table::{Table, TableDerivs};
use super::{solve_corrector, LayerAnsatz};
use crate::error::Result;
use crate::profile::FredholmSolver;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct ApproxEigenpair {
    /// `μ̄(y) = √2 b(y)`.
    pub mu_bar: Vec<f64>,
    pub h1: Table,
    derivs: TableDerivs,
}

impl ApproxEigenpair {
    /// Solves `L₀H₁ = −2b(s + Φ₀)HH′ − κH″ + 6HH′h₁ + μ̄H′`.
    pub fn build(ansatz: &LayerAnsatz) -> Result<Self> {
        let p = &ansatz.profile;
        let solver = FredholmSolver::new(p, ansatz.config.stencil)?;
        let b = ansatz.taylor.b();
        let mu_bar = ansatz.mu_bar();
        let h1 = &ansatz.h[0];
        let phi0 = &ansatz.phi[0];
        let rows = (0..h1.ny)
            .map(|j| {
                (0..p.grid.n)
                    .map(|i| {
                        let hh = p.h[i] * p.dh[i];
                        -2.0 * b[j] * (p.s[i] + phi0[j]) * hh - ansatz.kappa[j] * p.d2h[i]
                            + 6.0 * hh * h1.get(j, i)
                            + mu_bar[j] * p.dh[i]
                    })
                    .collect()
            })
            .collect();
        let zero = vec![0.0; h1.ny];
        let (big_h1, _) = solve_corrector(&solver, &zero, b, &Table::from_rows(rows))?;
        let derivs = TableDerivs::new(&big_h1, p.spacing(), ansatz.config.stencil, ansatz.interface_diff());
        Ok(Self {
            mu_bar,
            h1: big_h1,
            derivs,
        })
    }

    /// `‖𝕃Ψ − ε μ̄ Ψ‖∞ / ‖Ψ‖∞` over nodes with `|ζ| ≤ zeta_max`.
    pub fn residual_sup(&self, ansatz: &LayerAnsatz, eps: f64, zeta_max: f64) -> f64 {
        let ny = self.h1.ny;
        let s = &ansatz.eval.s;
        let limit = zeta_max.min(ansatz.profile.grid.half_length - 2.0);
        let (num, den) = (0..ny)
            .into_par_iter()
            .map(|j| {
                let shift = ansatz.terms().shift(j, eps).v;
                let mut num = 0.0_f64;
                let mut den = 0.0_f64;
                for i in 0..s.len() {
                    if s[i].abs() > limit || (s[i] + shift).abs() > limit {
                        continue;
                    }
                    let (lpsi, psi) = ansatz.eval.linearized_psi(ansatz.terms(), &self.derivs, j, i, eps);
                    num = num.max((lpsi - eps * self.mu_bar[j] * psi).abs());
                    den = den.max(psi.abs());
                }
                (num, den)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        num / den.max(f64::MIN_POSITIVE)
    }

    /// `Ψ(y_j, s_i)` on the layer grid.
    pub fn psi(&self, ansatz: &LayerAnsatz, j: usize, i: usize, eps: f64) -> f64 {
        ansatz.profile.dh[i] + eps * self.h1.get(j, i)
    }
}
