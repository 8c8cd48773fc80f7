//! Convergence studies of the ansatz residual and the eigen-residual.

use super::LayerAnsatz;
use crate::error::Result;
use crate::numerics::loglog_slope;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct OrderStudy {
    pub order: usize,
    pub eps: Vec<f64>,
    /// Region `|ζ| ≤ zeta_max` in which residuals are measured.
    pub zeta_max: f64,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log ε`.
    pub slope: f64,
    pub eigen_residuals: Vec<f64>,
    pub eigen_slope: f64,
}

/// Residual sup-norms on a ladder of `ε`, over a region of fixed scaled width
/// chosen so that it stays inside the tube for the largest `ε`.
pub fn residual_order_study(ansatz: &LayerAnsatz, eps: &[f64]) -> Result<OrderStudy> {
    let eps_max = eps.iter().cloned().fold(0.0, f64::max);
    let zeta_max = ansatz.zeta_limit(eps_max);
    let residuals: Vec<f64> = eps.iter().map(|&e| ansatz.residual_sup(e, zeta_max)).collect();
    let pair = ansatz.approx_eigenpair()?;
    let eigen_residuals: Vec<f64> = eps.iter().map(|&e| pair.residual_sup(ansatz, e, zeta_max)).collect();
    Ok(OrderStudy {
        order: ansatz.order,
        eps: eps.to_vec(),
        zeta_max,
        slope: loglog_slope(eps, &residuals),
        eigen_slope: loglog_slope(eps, &eigen_residuals),
        residuals,
        eigen_residuals,
    })
}

impl LayerAnsatz {
    pub fn approx_eigenpair(&self) -> Result<super::ApproxEigenpair> {
        super::ApproxEigenpair::build(self)
    }
}
