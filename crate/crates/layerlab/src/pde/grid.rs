//! Second-order discretizations of the Neumann Laplacian on the supported
//! domains, written as `Δ_h = W⁻¹K` with `W` the nodal volume weights and
//! `K` symmetric.

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Point};
use crate::numerics::sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

/// Node counts per direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Interval {
        n: usize,
    },
    /// `ny` periodic nodes (no duplicate endpoint) by `nz` nodes across.
    Strip {
        ny: usize,
        nz: usize,
    },
    /// Radial nodes; `angular` adds `−ℓ²/r²` (two dimensions, annulus only).
    Radial {
        n: usize,
        #[serde(default)]
        angular: u32,
    },
}

/// Discretized domain: node coordinates, volume weights and stiffness.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub domain: DomainSpec,
    pub grid: GridSpec,
    /// Cartesian node positions (`[x, 0]`, `[y, z]` or `[r, 0]`).
    pub nodes: Vec<Point>,
    /// Nodal volume elements `W`.
    pub weights: Vec<f64>,
    /// `K = W Δ_h`, symmetric negative semidefinite.
    pub stiffness: CsrMatrix,
    /// Spacing per direction (`[h]`, `[h_y, h_z]` or `[h_r]`).
    pub spacing: Vec<f64>,
}

fn trapezoid(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Neumann second difference with ghost reflection, scaled by trapezoid weights.
fn neumann_1d(n: usize, h: f64) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n - 1 {
        t.push((i, i + 1, 1.0 / h));
        t.push((i + 1, i, 1.0 / h));
        t.push((i, i, -1.0 / h));
        t.push((i + 1, i + 1, -1.0 / h));
    }
    t
}

impl Discretization {
    pub fn build(domain: DomainSpec, grid: GridSpec) -> Result<Self> {
        domain.validate()?;
        match (domain, grid) {
            (DomainSpec::Interval { lo, hi }, GridSpec::Interval { n }) => {
                if n < 5 {
                    return Err(Error::InvalidInput(format!("interval grid needs ≥ 5 nodes, got {n}")));
                }
                let h = (hi - lo) / (n - 1) as f64;
                let nodes = (0..n).map(|i| [lo + i as f64 * h, 0.0]).collect();
                let stiffness = CsrMatrix::from_triplets(n, neumann_1d(n, h));
                Ok(Self {
                    domain,
                    grid,
                    nodes,
                    weights: trapezoid(n, h),
                    stiffness,
                    spacing: vec![h],
                })
            }
            (DomainSpec::PeriodicStrip { period, z_lo, z_hi }, GridSpec::Strip { ny, nz }) => {
                if ny < 4 || nz < 5 {
                    return Err(Error::InvalidInput(format!("strip grid {ny}×{nz} too coarse")));
                }
                let hy = period / ny as f64;
                let hz = (z_hi - z_lo) / (nz - 1) as f64;
                let wz = trapezoid(nz, hz);
                let idx = |j: usize, i: usize| j * nz + i;
                let zt = neumann_1d(nz, hz);
                let mut t = Vec::with_capacity(ny * (zt.len() + 4 * nz));
                let mut nodes = Vec::with_capacity(ny * nz);
                let mut weights = Vec::with_capacity(ny * nz);
                for j in 0..ny {
                    for i in 0..nz {
                        nodes.push([j as f64 * hy, z_lo + i as f64 * hz]);
                        weights.push(hy * wz[i]);
                    }
                    for &(r, c, v) in &zt {
                        t.push((idx(j, r), idx(j, c), hy * v));
                    }
                    let jn = (j + 1) % ny;
                    for i in 0..nz {
                        let c = wz[i] / hy;
                        t.push((idx(j, i), idx(jn, i), c));
                        t.push((idx(jn, i), idx(j, i), c));
                        t.push((idx(j, i), idx(j, i), -c));
                        t.push((idx(jn, i), idx(jn, i), -c));
                    }
                }
                let stiffness = CsrMatrix::from_triplets(ny * nz, t);
                Ok(Self {
                    domain,
                    grid,
                    nodes,
                    weights,
                    stiffness,
                    spacing: vec![hy, hz],
                })
            }
            (DomainSpec::RadialAnnulus { .. } | DomainSpec::RadialDisk { .. }, GridSpec::Radial { n, angular }) => {
                let (r_in, r_out, dim) = match domain {
                    DomainSpec::RadialAnnulus { r_in, r_out, dim } => (r_in, r_out, dim),
                    DomainSpec::RadialDisk { r_out, dim } => (0.0, r_out, dim),
                    _ => unreachable!(),
                };
                if n < 5 {
                    return Err(Error::InvalidInput(format!("radial grid needs ≥ 5 nodes, got {n}")));
                }
                if angular > 0 && (r_in == 0.0 || dim != 2) {
                    return Err(Error::InvalidInput(
                        "angular modes need a two-dimensional annulus".into(),
                    ));
                }
                let h = (r_out - r_in) / (n - 1) as f64;
                let p = dim as i32 - 1;
                let r: Vec<f64> = (0..n).map(|i| r_in + i as f64 * h).collect();
                // Cell [r_{i−1/2}, r_{i+1/2}] clipped to the domain; volume ∫ r^{n−1} dr.
                let face = |i: usize| r_in + (i as f64 + 0.5) * h;
                let vol = |a: f64, b: f64| (b.powi(p + 1) - a.powi(p + 1)) / (p + 1) as f64;
                let weights: Vec<f64> = (0..n)
                    .map(|i| {
                        let a = if i == 0 { r_in } else { face(i - 1) };
                        let b = if i == n - 1 { r_out } else { face(i) };
                        vol(a, b)
                    })
                    .collect();
                let mut t = Vec::with_capacity(4 * n);
                for i in 0..n - 1 {
                    let c = face(i).powi(p) / h;
                    t.push((i, i + 1, c));
                    t.push((i + 1, i, c));
                    t.push((i, i, -c));
                    t.push((i + 1, i + 1, -c));
                }
                if angular > 0 {
                    let l2 = (angular as f64).powi(2);
                    for i in 0..n {
                        // ∫ r^{−1} dr over the cell, exact for the two-dimensional measure.
                        let a = if i == 0 { r_in } else { face(i - 1) };
                        let b = if i == n - 1 { r_out } else { face(i) };
                        t.push((i, i, -l2 * (b / a).ln()));
                    }
                }
                let stiffness = CsrMatrix::from_triplets(n, t);
                let nodes = r.iter().map(|&x| [x, 0.0]).collect();
                Ok(Self {
                    domain,
                    grid,
                    nodes,
                    weights,
                    stiffness,
                    spacing: vec![h],
                })
            }
            _ => Err(Error::InvalidInput(format!(
                "grid {grid:?} does not fit domain {domain:?}"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Δ_h u = W⁻¹ K u`.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.stiffness.matvec(u);
        for (vi, w) in v.iter_mut().zip(&self.weights) {
            *vi /= w;
        }
        v
    }

    /// `Σ W u v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    /// `(ny, nz)` for strips, `(1, n)` otherwise.
    pub fn shape(&self) -> (usize, usize) {
        match self.grid {
            GridSpec::Strip { ny, nz } => (ny, nz),
            GridSpec::Interval { n } | GridSpec::Radial { n, .. } => (1, n),
        }
    }

    /// Largest grid spacing.
    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn strip() -> Discretization {
        Discretization::build(
            DomainSpec::PeriodicStrip {
                period: 2.0 * PI,
                z_lo: -0.5,
                z_hi: 0.5,
            },
            GridSpec::Strip { ny: 32, nz: 41 },
        )
        .unwrap()
    }

    #[test]
    fn stiffness_is_symmetric_and_annihilates_constants() {
        let grids = [
            Discretization::build(DomainSpec::Interval { lo: -1.0, hi: 1.0 }, GridSpec::Interval { n: 33 }).unwrap(),
            strip(),
            Discretization::build(
                DomainSpec::RadialDisk { r_out: 1.0, dim: 3 },
                GridSpec::Radial { n: 40, angular: 0 },
            )
            .unwrap(),
        ];
        for d in &grids {
            assert!(d.stiffness.symmetry_defect() < 1e-12);
            let ones = vec![1.0; d.len()];
            assert!(d.laplacian(&ones).iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn strip_laplacian_is_second_order() {
        let err = |ny: usize, nz: usize| {
            let d = Discretization::build(
                DomainSpec::PeriodicStrip {
                    period: 2.0 * PI,
                    z_lo: -0.5,
                    z_hi: 0.5,
                },
                GridSpec::Strip { ny, nz },
            )
            .unwrap();
            // cos(2π(z + ½)) satisfies the Neumann condition at z = ±½.
            let f = |p: Point| p[0].sin() * (2.0 * PI * (p[1] + 0.5)).cos();
            let u: Vec<f64> = d.nodes.iter().map(|&p| f(p)).collect();
            let lap = d.laplacian(&u);
            let k = 1.0 + 4.0 * PI * PI;
            d.nodes
                .iter()
                .zip(&lap)
                .map(|(&p, l)| (l + k * f(p)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32, 41) / err(64, 81);
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn radial_volume_and_flux() {
        let d = Discretization::build(
            DomainSpec::RadialDisk { r_out: 1.0, dim: 2 },
            GridSpec::Radial { n: 201, angular: 0 },
        )
        .unwrap();
        assert!((d.weights.iter().sum::<f64>() - 0.5).abs() < 1e-12);
        // Δ r² = 2n in n dimensions; flux through r = 1 enters the last row.
        let u: Vec<f64> = d.nodes.iter().map(|p| p[0] * p[0]).collect();
        let lap = d.laplacian(&u);
        assert!(lap[1..200].iter().all(|v| (v - 4.0).abs() < 1e-8));
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let r = Discretization::build(
            DomainSpec::Interval { lo: 0.0, hi: 1.0 },
            GridSpec::Strip { ny: 8, nz: 8 },
        );
        assert!(r.is_err());
        let r = Discretization::build(
            DomainSpec::RadialDisk { r_out: 1.0, dim: 2 },
            GridSpec::Radial { n: 20, angular: 2 },
        );
        assert!(r.is_err());
    }
}
