//! The full problem `ε²Δu = (u − a)(u² − 1)` with Neumann conditions on a
//! fixed grid: residual, Jacobian, energy and solvers.

pub mod grid;
pub mod solve;

use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, DomainSpec, InterfaceSpec, Point};
use crate::numerics::sparse::CsrMatrix;
use serde::Serialize;

pub use grid::{Discretization, GridSpec};
pub use solve::{continuation, fixed_point_solve, newton_solve, FixedPointConfig, NewtonConfig, SolveReport};

/// Weighted symmetric operator `W·J` together with its weight vector.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: CsrMatrix,
    pub weights: Vec<f64>,
}

/// Discretized problem for a given coefficient field.
#[derive(Debug, Clone)]
pub struct Problem {
    pub disc: Discretization,
    pub field: CoefficientField,
    /// `a` at the nodes.
    pub a: Vec<f64>,
    /// Node positions in the coordinates of the interface.
    pub points: Vec<Point>,
}

impl Problem {
    pub fn new(domain: DomainSpec, grid: GridSpec, field: CoefficientField) -> Result<Self> {
        domain.check_interface(&field.interface)?;
        let disc = Discretization::build(domain, grid)?;
        let points: Vec<Point> = match field.interface {
            InterfaceSpec::Circle { center, .. } => disc.nodes.iter().map(|p| [center[0] + p[0], center[1]]).collect(),
            _ => disc.nodes.clone(),
        };
        let a = points.iter().map(|&p| field.eval(p)).collect();
        Ok(Self { disc, field, a, points })
    }

    pub fn len(&self) -> usize {
        self.disc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disc.is_empty()
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values, grid has {}",
                u.len(),
                self.len()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field has non-finite values".into()));
        }
        Ok(())
    }

    /// `ε²Δ_h u − (u − a)(u² − 1)`.
    pub fn residual(&self, u: &[f64], eps: f64) -> Result<Vec<f64>> {
        self.check(u)?;
        let lap = self.disc.laplacian(u);
        Ok(lap
            .iter()
            .zip(u)
            .zip(&self.a)
            .map(|((l, &v), &a)| eps * eps * l - (v - a) * (v * v - 1.0))
            .collect())
    }

    /// `f′(u) = 1 − 3u² + 2au`, the potential part of the linearization.
    pub fn potential(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.a)
            .map(|(&v, &a)| 1.0 - 3.0 * v * v + 2.0 * a * v)
            .collect()
    }

    /// Unweighted Jacobian `J = ε²Δ_h + diag(1 − 3u² + 2au)`.
    pub fn jacobian_raw(&self, u: &[f64], eps: f64) -> Result<CsrMatrix> {
        let op = self.jacobian(u, eps)?;
        let mut m = op.matrix;
        for i in 0..m.n {
            let w = self.disc.weights[i];
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.val[k] /= w;
            }
        }
        Ok(m)
    }

    /// Symmetric `W J = ε² K + diag(W f′(u))`.
    pub fn jacobian(&self, u: &[f64], eps: f64) -> Result<DiscreteOperator> {
        self.check(u)?;
        let d: Vec<f64> = self
            .potential(u)
            .iter()
            .zip(&self.disc.weights)
            .map(|(p, w)| p * w)
            .collect();
        let matrix = self.disc.stiffness.scale(eps * eps).add_diagonal(&d);
        Ok(DiscreteOperator {
            matrix,
            weights: self.disc.weights.clone(),
        })
    }

    /// `J_ε(u) = ε²/2 ∫|∇u|² + ∫F(x, u)` with `F = u⁴/4 − au³/3 − u²/2 + au`.
    pub fn energy(&self, u: &[f64], eps: f64) -> Result<f64> {
        self.check(u)?;
        let ku = self.disc.stiffness.matvec(u);
        let grad: f64 = -0.5 * eps * eps * u.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>();
        let pot: f64 = u
            .iter()
            .zip(&self.a)
            .zip(&self.disc.weights)
            .map(|((&v, &a), w)| w * (0.25 * v.powi(4) - a * v.powi(3) / 3.0 - 0.5 * v * v + a * v))
            .sum();
        Ok(grad + pot)
    }

    /// Discrete gradient of the energy, `−W · residual`.
    pub fn energy_gradient(&self, u: &[f64], eps: f64) -> Result<Vec<f64>> {
        self.check(u)?;
        let ku = self.disc.stiffness.matvec(u);
        Ok(ku
            .iter()
            .zip(u)
            .zip(&self.a)
            .zip(&self.disc.weights)
            .map(|(((k, &v), &a), w)| -eps * eps * k + w * (v - a) * (v * v - 1.0))
            .collect())
    }

    /// Outer deviation and zero-set location of a layer solution.
    pub fn layer_shape(&self, u: &[f64], margin: f64) -> Result<LayerShape> {
        self.check(u)?;
        let sigma = self.field.orientation()?;
        let iface = &self.field.interface;
        let rho: Vec<f64> = self.points.iter().map(|&p| iface.raw_distance(p)).collect();
        let outer_dev = (0..u.len())
            .filter(|&i| rho[i].abs() >= margin)
            .map(|i| (u[i] - (sigma * rho[i]).signum()).abs())
            .fold(0.0, f64::max);
        // Zeros along the normal grid lines, located by linear interpolation.
        let (lines, len) = self.disc.shape();
        let (mut zeros, mut dist) = (0, 0.0_f64);
        for j in 0..lines {
            for i in j * len..(j + 1) * len - 1 {
                if (u[i] <= 0.0) != (u[i + 1] <= 0.0) {
                    let t = u[i] / (u[i] - u[i + 1]);
                    zeros += 1;
                    dist = dist.max((rho[i] + t * (rho[i + 1] - rho[i])).abs());
                }
            }
        }
        Ok(LayerShape {
            outer_dev,
            margin,
            zero_set_dist: dist,
            zeros,
        })
    }
}

/// How closely a computed layer follows `sign(ζ)` and the interface.
#[derive(Debug, Clone, Serialize)]
pub struct LayerShape {
    /// `max |u − sign(ζ)|` over nodes at distance at least `margin` from `K`.
    pub outer_dev: f64,
    pub margin: f64,
    /// Largest distance from `K` of a zero along the normal grid lines.
    pub zero_set_dist: f64,
    pub zeros: usize,
}
