//! Global extension `û = sign(ζ) + χ (u_k − sign(ζ))` of the layer ansatz,
//! with a quintic cutoff between `½ε^{−γ}` and `¾ε^{−γ}` in the scaled
//! distance.

use super::eigenpair::ApproxEigenpair;
use super::table::Table;
use super::LayerAnsatz;
use crate::geometry::Point;
use crate::numerics::interp::UniformAxis;
use crate::profile::{h, h_prime};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Values of the extended ansatz at a set of points.
#[derive(Debug, Clone)]
pub struct ExtendedSolution {
    pub eps: f64,
    pub gamma: f64,
    pub values: Vec<f64>,
}

/// Smooth cutoff in the scaled distance: 1 for `|ζ| ≤ ½ε^{−γ}`, 0 beyond `¾ε^{−γ}`.
pub fn cutoff(zeta: f64, eps: f64, gamma: f64) -> f64 {
    let e = eps.powf(-gamma);
    let t = ((zeta.abs() - 0.5 * e) / (0.25 * e)).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Trigonometric interpolation weights on `n` uniform periodic nodes.
fn periodic_weights(n: usize, period: f64, y: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let h = period / n as f64;
    (0..n)
        .map(|j| {
            let theta = 2.0 * PI * (y - j as f64 * h) / period;
            let half = 0.5 * theta;
            if half.sin().abs() < 1e-14 {
                return 1.0;
            }
            let nf = n as f64;
            if n.is_multiple_of(2) {
                (nf * half).sin() * half.cos() / half.sin() / nf
            } else {
                (nf * half).sin() / half.sin() / nf
            }
        })
        .collect()
}

struct Sampler<'a> {
    ansatz: &'a LayerAnsatz,
    axis: UniformAxis,
}

impl<'a> Sampler<'a> {
    fn new(ansatz: &'a LayerAnsatz) -> Self {
        let g = ansatz.profile.grid;
        Self {
            ansatz,
            axis: UniformAxis {
                x0: -g.half_length,
                h: g.spacing(),
                n: g.n,
            },
        }
    }

    fn y_weights(&self, y: f64) -> Vec<f64> {
        let chart = self.ansatz.chart();
        periodic_weights(chart.n_y(), chart.interface.length(), y)
    }

    fn shift(&self, wy: &[f64], eps: f64) -> f64 {
        let mut p = 1.0;
        let mut out = 0.0;
        for phi in &self.ansatz.phi {
            out += p * wy.iter().zip(phi).map(|(w, v)| w * v).sum::<f64>();
            p *= eps;
        }
        out
    }

    /// Six-point Lagrange in `s`, trigonometric in `y`; zero off the line grid.
    fn table(&self, t: &Table, wy: &[f64], s: f64) -> f64 {
        let g = self.ansatz.profile.grid;
        if s.abs() >= g.half_length {
            return 0.0;
        }
        let (start, ws) = self.axis.stencil(s, 6);
        wy.iter()
            .enumerate()
            .map(|(j, wj)| wj * ws.iter().enumerate().map(|(k, w)| w * t.get(j, start + k)).sum::<f64>())
            .sum()
    }
}

impl LayerAnsatz {
    /// `u_k` at tangential coordinate `y` and scaled oriented distance `ζ`.
    pub fn layer_value(&self, y: f64, zeta: f64, eps: f64) -> f64 {
        let smp = Sampler::new(self);
        let wy = smp.y_weights(y);
        self.layer_value_with(&smp, &wy, zeta, eps)
    }

    fn layer_value_with(&self, smp: &Sampler, wy: &[f64], zeta: f64, eps: f64) -> f64 {
        let s = zeta - smp.shift(wy, eps);
        let mut u = h(s);
        let mut p = eps;
        for t in &self.h {
            u += p * smp.table(t, wy, s);
            p *= eps;
        }
        u
    }

    /// Extended ansatz at domain points.
    pub fn extend(&self, eps: f64, points: &[Point]) -> ExtendedSolution {
        let gamma = self.config.gamma;
        let smp = Sampler::new(self);
        let chart = self.chart();
        let values = points
            .par_iter()
            .map(|&x| {
                let zeta = chart.signed_distance(x) / eps;
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let chi = cutoff(zeta, eps, gamma);
                if chi == 0.0 {
                    return sign;
                }
                let wy = smp.y_weights(chart.tangential(x));
                sign + chi * (self.layer_value_with(&smp, &wy, zeta, eps) - sign)
            })
            .collect();
        ExtendedSolution { eps, gamma, values }
    }

    /// Cut-off approximate eigenfunction `χ Ψ` at domain points.
    pub fn extend_psi(&self, pair: &ApproxEigenpair, eps: f64, points: &[Point]) -> Vec<f64> {
        let gamma = self.config.gamma;
        let smp = Sampler::new(self);
        let chart = self.chart();
        points
            .par_iter()
            .map(|&x| {
                let zeta = chart.signed_distance(x) / eps;
                let chi = cutoff(zeta, eps, gamma);
                if chi == 0.0 {
                    return 0.0;
                }
                let wy = smp.y_weights(chart.tangential(x));
                let s = zeta - smp.shift(&wy, eps);
                chi * (h_prime(s) + eps * smp.table(&pair.h1, &wy, s))
            })
            .collect()
    }
}
