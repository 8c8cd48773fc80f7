//! Spectra of the interface operator and of the linearization at a layer:
//! the small-eigenvalue law, eigenfunction structure, ε-derivatives,
//! resonance crossings and gap selection.
//!
//! Eigenvalues are those of the weighted pencil `J u = λ b̂ u` with
//! `J = ε²Δ + 1 − 3u² + 2au` on the unscaled domain. The dilation `x ↦ x/ε`
//! maps `ε²Δ` to `Δ` without changing eigenvalues, so these agree with the
//! values of the dilated problem.

pub mod decompose;
pub mod derivative;
pub mod kspec;
pub mod scan;

use crate::asymptotic::LayerAnsatz;
use crate::error::{Error, Result};
use crate::numerics::eigen::{eig_near_shift, ShiftInvertOptions};
use crate::pde::Problem;
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

pub use decompose::{decompose_eigenfunction, Decomposition};
pub use derivative::{eig_derivative, DerivativeReport, ModeDerivative, TRACKING_THRESHOLD};
pub use kspec::{k_spectrum, predict_small_eigs, sample_weight, weyl_fit, KSpectrum, WeylFit};
pub use scan::{refine_resonance, scan_eps, Crossing, EpsScanReport, Gap, Resonance, ScanOptions};

/// Limiting drift `c = 8π²/45 − 10/3` of near-zero eigenvalues in `ε`.
pub const DRIFT_CONSTANT: f64 = 8.0 * PI * PI / 45.0 - 10.0 / 3.0;

/// Half-width `3√2 ε` of the near-zero window.
pub fn near_zero_window(eps: f64) -> f64 {
    3.0 * SQRT_2 * eps
}

/// Positive extension `b̂(x) = σ ∂_ρ a(y(x), 0)` of the weight to the grid.
pub fn weight_extension(problem: &Problem) -> Result<Vec<f64>> {
    let field = &problem.field;
    let sigma = field.orientation()?;
    let w: Vec<f64> = problem
        .points
        .iter()
        .map(|&p| sigma * field.grad_fermi(field.interface.tangential(p), 0.0).0)
        .collect();
    let min_b = w.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_b > 0.0) {
        return Err(Error::NonPositiveWeight { min_b });
    }
    Ok(w)
}

/// The extended ansatz `û_{k,ε}` at the grid nodes.
pub fn ansatz_on_grid(ansatz: &LayerAnsatz, problem: &Problem, eps: f64) -> Vec<f64> {
    ansatz.extend(eps, &problem.points).values
}

/// Eigenpairs of the weighted linearization nearest zero.
#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub eps: f64,
    /// If set, every eigenvalue with `|λ| ≤ window` is included.
    pub window: Option<f64>,
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// `b̂`-orthonormal eigenvectors in the order of `values`.
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    pub krylov_dim: usize,
}

impl EigenReport {
    /// Index of the eigenvalue of smallest magnitude.
    pub fn nearest_zero(&self) -> usize {
        (0..self.values.len())
            .min_by(|&a, &b| self.values[a].abs().total_cmp(&self.values[b].abs()))
            .unwrap_or(0)
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }
}

/// Mass matrix `W b̂` of the weighted pencil.
pub fn mass(problem: &Problem, weight: &[f64]) -> Vec<f64> {
    problem.disc.weights.iter().zip(weight).map(|(w, b)| w * b).collect()
}

/// At least `count` eigenvalues of `J v = λ b̂ v` nearest zero, and all of
/// those with `|λ| ≤ window` when a window is given.
pub fn linearized_spectrum(
    problem: &Problem,
    u: &[f64],
    eps: f64,
    weight: &[f64],
    count: usize,
    window: Option<f64>,
) -> Result<EigenReport> {
    let op = problem.jacobian(u, eps)?;
    let m = mass(problem, weight);
    let base = ShiftInvertOptions {
        count,
        window,
        max_dim: (4 * count + 80).max(240),
        ..ShiftInvertOptions::default()
    };
    let eig = match eig_near_shift(&op.matrix, &m, &base) {
        Err(Error::EigensolverStall { .. }) => {
            let retry = ShiftInvertOptions {
                max_dim: 2 * base.max_dim,
                seed: base.seed ^ 0x9E37,
                ..base
            };
            eig_near_shift(&op.matrix, &m, &retry)?
        }
        other => other?,
    };
    let mut idx: Vec<usize> = (0..eig.values.len())
        .filter(|&i| window.is_none_or(|w| eig.values[i].abs() <= w) || i < count)
        .collect();
    idx.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));
    Ok(EigenReport {
        eps,
        window,
        values: idx.iter().map(|&i| eig.values[i]).collect(),
        vectors: idx.iter().map(|&i| eig.vectors[i].clone()).collect(),
        krylov_dim: eig.krylov_dim,
    })
}

/// Computed versus predicted near-zero eigenvalues, paired in descending order.
#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub eps: f64,
    /// `(computed, predicted)` pairs, largest first.
    pub pairs: Vec<(f64, f64)>,
    pub max_dev: f64,
    pub mean_dev: f64,
    pub computed_count: usize,
    pub predicted_count: usize,
}

impl MatchReport {
    /// Largest deviation among the first `n` pairs.
    pub fn max_dev_first(&self, n: usize) -> f64 {
        self.pairs
            .iter()
            .take(n)
            .map(|(c, p)| (c - p).abs())
            .fold(0.0, f64::max)
    }
}

/// Pairs the windowed eigenvalues with `√2ε − ε²λ_j`.
///
/// Counts may differ only by modes whose prediction lies within `5ε²` of
/// the window edge; any other difference is a `CountMismatch`.
pub fn match_predictions(report: &EigenReport, kspec: &KSpectrum, eps: f64) -> Result<MatchReport> {
    let window = report
        .window
        .ok_or_else(|| Error::InvalidInput("prediction matching needs a windowed spectrum".into()))?;
    let all = predict_small_eigs(kspec, eps, kspec.values.len());
    if kspec.values.len() > 1 && all.last().is_some_and(|p| p.abs() <= window) {
        return Err(Error::WindowTooNarrow(format!(
            "interface spectrum has only {} modes, all inside the window",
            kspec.values.len()
        )));
    }
    let mut predicted: Vec<f64> = all.into_iter().filter(|p| p.abs() <= window).collect();
    predicted.sort_by(|a, b| b.total_cmp(a));
    let computed: Vec<f64> = report.values.iter().cloned().filter(|v| v.abs() <= window).collect();
    let edge = predict_small_eigs(kspec, eps, kspec.values.len())
        .iter()
        .filter(|p| (p.abs() - window).abs() <= 5.0 * eps * eps)
        .count();
    if computed.len().abs_diff(predicted.len()) > edge {
        return Err(Error::CountMismatch {
            computed: computed.len(),
            predicted: predicted.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = computed.iter().cloned().zip(predicted.iter().cloned()).collect();
    let devs: Vec<f64> = pairs.iter().map(|(c, p)| (c - p).abs()).collect();
    Ok(MatchReport {
        eps,
        max_dev: devs.iter().cloned().fold(0.0, f64::max),
        mean_dev: devs.iter().sum::<f64>() / devs.len().max(1) as f64,
        pairs,
        computed_count: computed.len(),
        predicted_count: predicted.len(),
    })
}
