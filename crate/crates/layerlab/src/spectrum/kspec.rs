//! Weighted Laplace–Beltrami spectrum `−Δ_K φ = λ b φ` on the interface.

use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, InterfaceSpec};
use crate::numerics::eigen::dense_symmetric;
use crate::numerics::fourier::diff_matrix;
use crate::numerics::linear_fit;
use serde::Serialize;

/// Power-law fit `λ_j ≈ C j^p`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeylFit {
    pub constant: f64,
    pub exponent: f64,
    /// Expected exponent `2/(n − 1)`.
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KSpectrum {
    /// `λ₁ ≤ λ₂ ≤ …`.
    pub values: Vec<f64>,
    /// Eigenvectors at `nodes`, orthonormal in `Σ h b φ ψ` (empty for spheres).
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    #[serde(skip)]
    pub nodes: Vec<f64>,
    #[serde(skip)]
    pub b: Vec<f64>,
    pub length: f64,
    pub weyl: Option<WeylFit>,
}

impl KSpectrum {
    /// Quadrature spacing on `K`.
    pub fn spacing(&self) -> f64 {
        if self.nodes.len() > 1 {
            self.length / self.nodes.len() as f64
        } else {
            1.0
        }
    }
}

/// Fits the Weyl law on the upper half of the positive eigenvalues.
pub fn weyl_fit(values: &[f64], expected: f64) -> Option<WeylFit> {
    let m = values.len();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (j, &v) in values.iter().enumerate().skip(m / 2) {
        if v > 0.0 {
            lx.push(((j + 1) as f64).ln());
            ly.push(v.ln());
        }
    }
    if lx.len() < 3 {
        return None;
    }
    let (exponent, c) = linear_fit(&lx, &ly);
    Some(WeylFit {
        constant: c.exp(),
        exponent,
        expected,
    })
}

/// Samples `b = σ ∂_ρ a` on `n` uniform nodes of `K`.
pub fn sample_weight(field: &CoefficientField, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let sigma = field.orientation()?;
    let len = field.interface.length();
    let n = if matches!(field.interface, InterfaceSpec::Point { .. }) {
        1
    } else {
        n
    };
    let y: Vec<f64> = (0..n).map(|j| j as f64 * len / n as f64).collect();
    let b = y.iter().map(|&y| sigma * field.grad_fermi(y, 0.0).0).collect();
    Ok((y, b))
}

/// The `m` smallest eigenvalues of `−Δ_K φ = λ b φ`.
///
/// Periodic curves use Fourier differentiation and a dense solve; a point has
/// the single eigenvalue 0; spheres (`dim ≥ 3`) use the closed form
/// `ℓ(ℓ + n − 2)/(R² b)` with constant `b`.
pub fn k_spectrum(interface: &InterfaceSpec, dim: usize, b: &[f64], m: usize) -> Result<KSpectrum> {
    interface.validate()?;
    if b.is_empty() || b.iter().any(|v| !(*v > 0.0)) {
        let min_b = b.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::NonPositiveWeight { min_b });
    }
    let length = interface.length();
    match *interface {
        InterfaceSpec::Point { .. } => Ok(KSpectrum {
            values: vec![0.0],
            vectors: vec![vec![1.0 / b[0].sqrt()]],
            nodes: vec![0.0],
            b: b[..1].to_vec(),
            length,
            weyl: None,
        }),
        InterfaceSpec::Circle { radius, .. } if dim >= 3 => {
            if b.iter().any(|v| (v - b[0]).abs() > 1e-12 * b[0]) {
                return Err(Error::InvalidInput("spheres support constant weights only".into()));
            }
            let d = dim as f64;
            let mut values = Vec::with_capacity(m);
            let mut l = 0usize;
            while values.len() < m {
                let mult = harmonic_dimension(dim, l);
                let v = l as f64 * (l as f64 + d - 2.0) / (radius * radius * b[0]);
                values.extend(std::iter::repeat_n(v, mult.min(m - values.len())));
                l += 1;
            }
            let weyl = weyl_fit(&values, 2.0 / (d - 1.0));
            Ok(KSpectrum {
                values,
                vectors: Vec::new(),
                nodes: Vec::new(),
                b: b.to_vec(),
                length,
                weyl,
            })
        }
        _ => {
            let n = b.len();
            if m > n / 4 {
                return Err(Error::InvalidInput(format!(
                    "{m} modes requested from {n} interface nodes (limit n/4)"
                )));
            }
            let d2 = diff_matrix(n, length, 2);
            let s: Vec<f64> = b.iter().map(|v| 1.0 / v.sqrt()).collect();
            let c: Vec<f64> = (0..n * n).map(|k| -d2[k] * s[k / n] * s[k % n]).collect();
            let (vals, vecs) = dense_symmetric(&c, n, true)?;
            let h = length / n as f64;
            let values: Vec<f64> = vals[..m].to_vec();
            let vectors = vecs[..m]
                .iter()
                .map(|psi| psi.iter().zip(&s).map(|(p, si)| p * si / h.sqrt()).collect())
                .collect();
            let weyl = weyl_fit(&values, 2.0);
            let nodes = (0..n).map(|j| j as f64 * h).collect();
            Ok(KSpectrum {
                values,
                vectors,
                nodes,
                b: b.to_vec(),
                length,
                weyl,
            })
        }
    }
}

/// Dimension of degree-`l` spherical harmonics on `S^{dim−1}`.
fn harmonic_dimension(dim: usize, l: usize) -> usize {
    let binom = |n: usize, k: usize| -> usize { (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1)) };
    let n = dim;
    if l == 0 {
        return 1;
    }
    let a = binom(l + n - 1, n - 1);
    let b = if l >= 2 { binom(l + n - 3, n - 1) } else { 0 };
    a - b
}

/// `λ_{j,ε} = √2 ε − ε² λ_j` for the first `count` modes.
pub fn predict_small_eigs(kspec: &KSpectrum, eps: f64, count: usize) -> Vec<f64> {
    kspec
        .values
        .iter()
        .take(count)
        .map(|l| std::f64::consts::SQRT_2 * eps - eps * eps * l)
        .collect()
}
