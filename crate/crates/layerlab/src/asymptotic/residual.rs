//! Pointwise evaluation of the scaled equation in the layer variables `(y, s)`.
//!
//! With `ζ = s + Φ(y)` and `z = εζ` the oriented distance, the scaled
//! Laplacian of `U(y, s)` reads
//!
//! ```text
//! U_ss + ε G(z) U_s + ε² m(z) (U_yy − 2Φ′U_ys − Φ″U_s + Φ′²U_ss)
//! ```
//!
//! where `G = ∂_ζ log √det g` and `m` is the tangential metric factor.

use super::table::{ShiftDerivs, TableDerivs};
use crate::geometry::{CoefficientField, FermiChart};
use crate::profile::{h, h_prime, h_second, h_third};

/// Correction terms of a (possibly partial) ansatz with their derivatives.
#[derive(Debug, Clone, Default)]
pub struct Terms {
    /// `Φ_0, Φ_1, …` (coefficient of `ε^i` at index `i`).
    pub phi: Vec<ShiftDerivs>,
    /// `h_1, h_2, …` (coefficient of `ε^{i+1}` at index `i`).
    pub h: Vec<TableDerivs>,
}

/// Values and derivatives of a layer function at one node.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet {
    pub v: f64,
    pub s: f64,
    pub ss: f64,
    pub y: f64,
    pub yy: f64,
    pub ys: f64,
}

impl Jet {
    fn add_scaled(&mut self, d: &TableDerivs, j: usize, i: usize, c: f64) {
        self.v += c * d.v.get(j, i);
        self.s += c * d.s.get(j, i);
        self.ss += c * d.ss.get(j, i);
        self.y += c * d.y.get(j, i);
        self.yy += c * d.yy.get(j, i);
        self.ys += c * d.ys.get(j, i);
    }
}

/// `Φ = Σ ε^i Φ_i` and its derivatives at interface node `j`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Shift {
    pub v: f64,
    pub y: f64,
    pub yy: f64,
}

impl Terms {
    pub fn shift(&self, j: usize, eps: f64) -> Shift {
        let mut out = Shift::default();
        let mut p = 1.0;
        for f in &self.phi {
            out.v += p * f.v[j];
            out.y += p * f.y[j];
            out.yy += p * f.yy[j];
            p *= eps;
        }
        out
    }

    /// `U = H(s) + Σ ε^i h_i(y, s)` at node `(j, i)` with line coordinate `s`.
    pub fn solution(&self, j: usize, i: usize, s: f64, eps: f64) -> Jet {
        let mut u = Jet {
            v: h(s),
            s: h_prime(s),
            ss: h_second(s),
            ..Jet::default()
        };
        let mut p = eps;
        for d in &self.h {
            u.add_scaled(d, j, i, p);
            p *= eps;
        }
        u
    }
}

/// Geometry and coefficient data needed to evaluate the equation.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub chart: FermiChart,
    pub field: CoefficientField,
    pub s: Vec<f64>,
}

impl Evaluator {
    /// Scaled Laplacian of the jet `u` at interface node `j`.
    fn laplacian(&self, u: &Jet, sh: &Shift, z: f64, eps: f64) -> f64 {
        let g = self.chart.normal_log_derivative(z);
        let m = self.chart.tangential_metric(z);
        let tangential = u.yy - 2.0 * sh.y * u.ys - sh.yy * u.s + sh.y * sh.y * u.ss;
        u.ss + eps * g * u.s + eps * eps * m * tangential
    }

    fn coefficient(&self, j: usize, z: f64) -> f64 {
        self.field.eval_fermi(self.chart.y[j], self.chart.sigma * z)
    }

    /// `ζ = s + Φ(y_j)` at node `(j, i)`.
    pub fn zeta(&self, terms: &Terms, j: usize, i: usize, eps: f64) -> f64 {
        self.s[i] + terms.shift(j, eps).v
    }

    /// `Δu − (u − a)(u² − 1)` in scaled variables at node `(j, i)`.
    pub fn residual(&self, terms: &Terms, j: usize, i: usize, eps: f64) -> f64 {
        let s = self.s[i];
        let sh = terms.shift(j, eps);
        let z = eps * (s + sh.v);
        let u = terms.solution(j, i, s, eps);
        let a = self.coefficient(j, z);
        self.laplacian(&u, &sh, z, eps) - (u.v - a) * (u.v * u.v - 1.0)
    }

    /// Linearization at the ansatz, `Δψ + (1 − 3u² + 2au)ψ`, applied to
    /// `Ψ = H′ + ε H₁`.
    pub fn linearized_psi(&self, terms: &Terms, h1: &TableDerivs, j: usize, i: usize, eps: f64) -> (f64, f64) {
        let s = self.s[i];
        let sh = terms.shift(j, eps);
        let z = eps * (s + sh.v);
        let u = terms.solution(j, i, s, eps);
        let a = self.coefficient(j, z);
        let mut psi = Jet {
            v: h_prime(s),
            s: h_second(s),
            ss: h_third(s),
            ..Jet::default()
        };
        psi.add_scaled(h1, j, i, eps);
        let lpsi = self.laplacian(&psi, &sh, z, eps) + (1.0 - 3.0 * u.v * u.v + 2.0 * a * u.v) * psi.v;
        (lpsi, psi.v)
    }
}
