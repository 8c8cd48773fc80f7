//! Splitting an eigenfunction into `φ(y) Ψ(y, ζ) + φ⊥` and expanding the
//! interface profile `φ(y)` in the weighted `K`-eigenbasis.

use super::kspec::KSpectrum;
use crate::asymptotic::{ApproxEigenpair, LayerAnsatz};
use crate::error::{Error, Result};
use crate::pde::Problem;
use serde::Serialize;
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub eps: f64,
    /// `φ(y_j)`: projection of each normal column onto `Ψ`.
    pub profile: Vec<f64>,
    /// Coefficients of the profile in the `K`-eigenbasis.
    pub alpha: Vec<f64>,
    /// `‖φ⊥‖/‖φ‖` in the scaled `H¹` norm `∫ φ² + ε²|∇φ|²`.
    pub perp_h1_ratio: f64,
    pub perp_l2_ratio: f64,
    /// Share of `Σα²` carried by modes with `|√2ε − ε²λ_j| ≥ ε^{5/4}`.
    pub high_mass: f64,
}

fn h1_norm2(problem: &Problem, v: &[f64], eps: f64) -> f64 {
    let kv = problem.disc.stiffness.matvec(v);
    let grad: f64 = -v.iter().zip(&kv).map(|(a, b)| a * b).sum::<f64>();
    problem.disc.inner(v, v) + eps * eps * grad
}

pub fn decompose_eigenfunction(
    problem: &Problem,
    ansatz: &LayerAnsatz,
    pair: &ApproxEigenpair,
    kspec: &KSpectrum,
    phi: &[f64],
    eps: f64,
) -> Result<Decomposition> {
    let (ny, nz) = problem.disc.shape();
    if phi.len() != ny * nz {
        return Err(Error::InvalidInput("eigenvector does not match the grid".into()));
    }
    if ny > 1 && kspec.nodes.len() != ny {
        return Err(Error::InvalidInput(format!(
            "interface spectrum on {} nodes, grid has {ny} columns",
            kspec.nodes.len()
        )));
    }
    let psi = ansatz.extend_psi(pair, eps, &problem.points);
    let w = &problem.disc.weights;
    let mut profile = vec![0.0; ny];
    let mut perp = phi.to_vec();
    for j in 0..ny {
        let col = j * nz..(j + 1) * nz;
        let num: f64 = col.clone().map(|k| w[k] * phi[k] * psi[k]).sum();
        let den: f64 = col.clone().map(|k| w[k] * psi[k] * psi[k]).sum();
        profile[j] = num / den;
        for k in col {
            perp[k] -= profile[j] * psi[k];
        }
    }
    let perp_h1_ratio = (h1_norm2(problem, &perp, eps) / h1_norm2(problem, phi, eps)).sqrt();
    let perp_l2_ratio = (problem.disc.inner(&perp, &perp) / problem.disc.inner(phi, phi)).sqrt();

    let h = kspec.spacing();
    let alpha: Vec<f64> = kspec
        .vectors
        .iter()
        .map(|v| (0..ny).map(|j| h * kspec.b[j] * profile[j] * v[j]).sum())
        .collect();
    let total: f64 = (0..ny).map(|j| h * kspec.b[j] * profile[j] * profile[j]).sum();
    let threshold = eps.powf(1.25);
    let small = |l: f64| (SQRT_2 * eps - eps * eps * l).abs() < threshold;
    if kspec.values.len() > 1 && kspec.values.last().is_some_and(|&l| small(l)) {
        return Err(Error::InvalidInput(
            "interface spectrum too short to separate low modes".into(),
        ));
    }
    let low: f64 = kspec
        .values
        .iter()
        .zip(&alpha)
        .filter(|(l, _)| small(**l))
        .map(|(_, a)| a * a)
        .sum();
    let high_mass = ((total - low) / total).max(0.0);
    Ok(Decomposition {
        eps,
        profile,
        alpha,
        perp_h1_ratio,
        perp_l2_ratio,
        high_mass,
    })
}
