//! ε-derivatives of near-zero eigenvalues: centered differences of tracked
//! modes against the Kato quotient bounds.
//!
//! Along the ansatz family the pencil is `A(ε) = W(ε²Δ_h + 1 − 3û² + 2aû)`
//! with fixed mass `W b̂`, so `A′ = 2εK + W diag((2a − 6û) ∂_ε û)`. For a
//! cluster with `M`-orthonormal basis `V` every branch derivative lies
//! between the extreme eigenvalues `T¹ ≤ T²` of `Vᵀ A′ V`.

use super::{ansatz_on_grid, linearized_spectrum, mass, EigenReport};
use crate::asymptotic::LayerAnsatz;
use crate::error::{Error, Result};
use crate::numerics::dot;
use crate::numerics::eigen::dense_symmetric;
use crate::pde::Problem;
use serde::Serialize;

/// Minimum subspace overlap accepted when matching modes across `ε`.
pub const TRACKING_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Serialize)]
pub struct ModeDerivative {
    pub lambda: f64,
    pub multiplicity: usize,
    /// `(λ(ε + δ) − λ(ε − δ)) / 2δ` of the tracked cluster mean.
    pub fd: f64,
    pub kato_lo: f64,
    pub kato_hi: f64,
    pub overlap: f64,
}

impl ModeDerivative {
    pub fn within(&self, slack: f64) -> bool {
        self.fd >= self.kato_lo - slack && self.fd <= self.kato_hi + slack
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub eps: f64,
    pub delta: f64,
    /// `10 · max(δ², h²)`.
    pub slack: f64,
    pub modes: Vec<ModeDerivative>,
}

/// Groups indices of (descending) eigenvalues that coincide to `tol`.
fn clusters(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..values.len() {
        match out.last_mut() {
            Some(c) if (values[c[0]] - values[i]).abs() <= tol => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

fn cluster_tol(values: &[f64]) -> f64 {
    1e-8 * values.iter().map(|v| v.abs()).fold(1e-3, f64::max)
}

fn m_dot(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    m.iter().zip(a).zip(b).map(|((m, a), b)| m * a * b).sum()
}

/// Best-overlapping cluster of `other` for the cluster `c` of `base`.
fn track(base: &EigenReport, c: &[usize], other: &EigenReport, m: &[f64]) -> (f64, f64) {
    let groups = clusters(&other.values, cluster_tol(&other.values));
    let mut best = (0.0, f64::NAN);
    for g in &groups {
        let s: f64 = c
            .iter()
            .map(|&i| {
                g.iter()
                    .map(|&k| m_dot(m, &base.vectors[i], &other.vectors[k]).powi(2))
                    .sum::<f64>()
            })
            .sum();
        let overlap = (s / c.len() as f64).sqrt();
        if overlap > best.0 {
            let mean = g.iter().map(|&k| other.values[k]).sum::<f64>() / g.len() as f64;
            best = (overlap, mean);
        }
    }
    best
}

/// Derivatives of the `n_modes` clusters nearest zero at `eps`.
pub fn eig_derivative(
    problem: &Problem,
    ansatz: &LayerAnsatz,
    weight: &[f64],
    eps: f64,
    delta: f64,
    n_modes: usize,
) -> Result<DerivativeReport> {
    if !(delta > 0.0 && delta < 0.5 * eps) {
        return Err(Error::InvalidInput(format!("difference step {delta} outside (0, ε/2)")));
    }
    let count = 2 * n_modes + 6;
    let m = mass(problem, weight);
    let spectrum = |e: f64| -> Result<(Vec<f64>, EigenReport)> {
        let u = ansatz_on_grid(ansatz, problem, e);
        let r = linearized_spectrum(problem, &u, e, weight, count, None)?;
        Ok((u, r))
    };
    let (u0, mid) = spectrum(eps)?;
    let (up, plus) = spectrum(eps + delta)?;
    let (um, minus) = spectrum(eps - delta)?;

    let mut groups = clusters(&mid.values, cluster_tol(&mid.values));
    groups.sort_by(|a, b| mid.values[a[0]].abs().total_cmp(&mid.values[b[0]].abs()));
    groups.truncate(n_modes);

    // Diagonal part of A′ (weighted) and the stiffness part 2εK.
    let w = &problem.disc.weights;
    let diag: Vec<f64> = (0..u0.len())
        .map(|i| w[i] * (2.0 * problem.a[i] - 6.0 * u0[i]) * (up[i] - um[i]) / (2.0 * delta))
        .collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        let kv = problem.disc.stiffness.matvec(v);
        kv.iter()
            .zip(&diag)
            .zip(v)
            .map(|((k, d), x)| 2.0 * eps * k + d * x)
            .collect()
    };

    let mut modes = Vec::with_capacity(groups.len());
    for g in &groups {
        let (op, vp) = track(&mid, g, &plus, &m);
        let (om, vm) = track(&mid, g, &minus, &m);
        let overlap = op.min(om);
        if overlap < TRACKING_THRESHOLD {
            return Err(Error::TrackingLost { overlap });
        }
        let d = g.len();
        let av: Vec<Vec<f64>> = g.iter().map(|&i| apply(&mid.vectors[i])).collect();
        let t: Vec<f64> = (0..d * d).map(|k| dot(&mid.vectors[g[k / d]], &av[k % d])).collect();
        let (vals, _) = dense_symmetric(&t, d, false)?;
        modes.push(ModeDerivative {
            lambda: g.iter().map(|&i| mid.values[i]).sum::<f64>() / d as f64,
            multiplicity: d,
            fd: (vp - vm) / (2.0 * delta),
            kato_lo: vals[0],
            kato_hi: vals[d - 1],
            overlap,
        });
    }
    let h = problem.disc.max_spacing();
    Ok(DerivativeReport {
        eps,
        delta,
        slack: 10.0 * delta.powi(2).max(h * h),
        modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering_groups_degenerate_pairs() {
        let v = [0.3, 0.1, 0.1 - 1e-13, -0.2, -0.2, -0.2 + 1e-12, -0.5];
        let c = clusters(&v, cluster_tol(&v));
        assert_eq!(c, vec![vec![0], vec![1, 2], vec![3, 4, 5], vec![6]]);
    }
}
