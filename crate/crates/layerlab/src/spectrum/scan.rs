//! ε-scans of the near-zero spectrum: positive counts, resonance crossings,
//! and crossing-free gaps in dyadic blocks.

use super::kspec::KSpectrum;
use super::{ansatz_on_grid, linearized_spectrum, DRIFT_CONSTANT};
use crate::asymptotic::LayerAnsatz;
use crate::error::{Error, Result};
use crate::numerics::sparse::SparseLu;
use crate::numerics::{linear_fit, loglog_slope};
use crate::pde::solve::{nearest_zero_eigenvalue, operator_scale};
use crate::pde::Problem;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub eps_lo: f64,
    pub eps_hi: f64,
    /// Geometrically spaced samples, including both ends.
    pub samples: usize,
    /// Relative bracket width at which crossing bisection stops.
    pub rel_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            eps_lo: 0.02,
            eps_hi: 0.2,
            samples: 40,
            rel_tol: 1e-4,
        }
    }
}

impl ScanOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_lo > 0.0 && self.eps_hi > self.eps_lo && self.samples >= 2 && self.rel_tol > 0.0) {
            return Err(Error::InvalidInput(format!("invalid scan range {self:?}")));
        }
        Ok(())
    }
}

/// A change of the positive count between two values of `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub eps: f64,
    pub bracket: (f64, f64),
    /// Number of eigenvalues that change sign (2 for a degenerate pair).
    pub jump: usize,
    /// Index of the interface mode with the nearest predicted resonance.
    pub mode: Option<usize>,
    /// `√2 / λ_j` of that mode.
    pub predicted: Option<f64>,
    pub rel_error: Option<f64>,
}

/// Largest crossing-free subinterval of a dyadic block.
#[derive(Debug, Clone, Serialize)]
pub struct Gap {
    pub block: (f64, f64),
    pub interval: (f64, f64),
    pub midpoint: f64,
    /// Eigenvalue of smallest magnitude at the midpoint.
    pub min_abs: f64,
    /// `¼ · width · |c|`.
    pub bound: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsScanReport {
    pub eps: Vec<f64>,
    pub counts: Vec<usize>,
    pub crossings: Vec<Crossing>,
    pub gaps: Vec<Gap>,
    /// Slope of `log N_ε` against `log ε`.
    pub count_exponent: f64,
    /// Slope of `log(gap width)` against `log ε` over blocks.
    pub gap_exponent: Option<f64>,
    /// Slope of `log(1/min|λ|)` against `log ε` at the gap midpoints.
    pub inverse_exponent: Option<f64>,
}

struct Scanner<'a> {
    problem: &'a Problem,
    ansatz: &'a LayerAnsatz,
    weight: &'a [f64],
}

impl Scanner<'_> {
    /// Number of positive eigenvalues; all of them lie below `√2ε max b̂`.
    fn positive_count(&self, eps: f64) -> Result<usize> {
        let u = ansatz_on_grid(self.ansatz, self.problem, eps);
        let window = 1.5 * SQRT_2 * eps;
        let r = linearized_spectrum(self.problem, &u, eps, self.weight, 4, Some(window))?;
        if r.values.first().is_some_and(|&top| top > window) {
            return Err(Error::WindowTooNarrow(format!(
                "positive eigenvalue {} above window {window}",
                r.values[0]
            )));
        }
        Ok(r.positive_count())
    }

    fn min_abs(&self, eps: f64) -> Result<f64> {
        let u = ansatz_on_grid(self.ansatz, self.problem, eps);
        Ok(linearized_spectrum(self.problem, &u, eps, self.weight, 2, None)?.min_abs())
    }

    /// Bisection on the count between `lo` (count `n_lo`) and `hi` (count `n_hi < n_lo`).
    fn bisect(&self, mut lo: f64, mut hi: f64, n_lo: usize, n_hi: usize, rel_tol: f64) -> Result<Vec<Crossing>> {
        let (mut c_lo, mut c_hi) = (n_lo, n_hi);
        while (hi - lo) > rel_tol * 0.5 * (hi + lo) {
            let mid = 0.5 * (lo + hi);
            let c = self.positive_count(mid)?;
            if c != c_lo && c != c_hi {
                // Several crossings inside the bracket: resolve each half separately.
                let mut left = self.bisect(lo, mid, c_lo, c, rel_tol)?;
                left.extend(self.bisect(mid, hi, c, c_hi, rel_tol)?);
                return Ok(left);
            }
            if c == c_lo {
                lo = mid;
                c_lo = c;
            } else {
                hi = mid;
                c_hi = c;
            }
        }
        Ok(vec![Crossing {
            eps: 0.5 * (lo + hi),
            bracket: (lo, hi),
            jump: c_lo.saturating_sub(c_hi),
            mode: None,
            predicted: None,
            rel_error: None,
        }])
    }
}

fn identify(c: &mut Crossing, kspec: &KSpectrum) {
    let best = kspec
        .values
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > 0.0)
        .map(|(j, l)| (j, SQRT_2 / l))
        .min_by(|a, b| (a.1 - c.eps).abs().total_cmp(&(b.1 - c.eps).abs()));
    if let Some((j, p)) = best {
        c.mode = Some(j);
        c.predicted = Some(p);
        c.rel_error = Some((c.eps - p).abs() / p);
    }
}

/// Dyadic blocks `(ε_hi 2^{−l−1}, ε_hi 2^{−l})` clipped to `[lo, hi]`.
fn dyadic_blocks(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut top = hi;
    while top > lo * (1.0 + 1e-12) {
        let bottom = (0.5 * top).max(lo);
        out.push((bottom, top));
        top *= 0.5;
    }
    out
}

/// Scans `ε` over `[eps_lo, eps_hi]` using the linearization at the ansatz.
pub fn scan_eps(
    problem: &Problem,
    ansatz: &LayerAnsatz,
    weight: &[f64],
    kspec: &KSpectrum,
    opts: &ScanOptions,
) -> Result<EpsScanReport> {
    opts.validate()?;
    if kspec.values.len() < 2 {
        return Err(Error::InvalidInput("scans need a nontrivial interface".into()));
    }
    if SQRT_2 * opts.eps_lo - opts.eps_lo.powi(2) * kspec.values.last().unwrap() > 0.0 {
        return Err(Error::WindowTooNarrow(
            "interface spectrum does not reach the smallest ε".into(),
        ));
    }
    let sc = Scanner {
        problem,
        ansatz,
        weight,
    };
    let n = opts.samples;
    let ratio = (opts.eps_lo / opts.eps_hi).powf(1.0 / (n - 1) as f64);
    let eps: Vec<f64> = (0..n).map(|k| opts.eps_hi * ratio.powi(k as i32)).collect();
    let counts = eps.iter().map(|&e| sc.positive_count(e)).collect::<Result<Vec<_>>>()?;

    let mut crossings = Vec::new();
    for k in 0..n - 1 {
        let (hi, lo) = (eps[k], eps[k + 1]);
        if counts[k + 1] > counts[k] {
            crossings.extend(sc.bisect(lo, hi, counts[k + 1], counts[k], opts.rel_tol)?);
        }
    }
    for c in &mut crossings {
        identify(c, kspec);
    }
    crossings.sort_by(|a, b| a.eps.total_cmp(&b.eps));

    let mut gaps = Vec::new();
    for block in dyadic_blocks(opts.eps_lo, opts.eps_hi) {
        let mut cuts = vec![block.0];
        cuts.extend(
            crossings
                .iter()
                .filter(|c| c.eps > block.0 && c.eps < block.1)
                .map(|c| c.eps),
        );
        cuts.push(block.1);
        let (a, b) = cuts
            .windows(2)
            .map(|w| (w[0], w[1]))
            .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
            .unwrap();
        let mid = 0.5 * (a + b);
        let min_abs = sc.min_abs(mid)?;
        let bound = 0.25 * (b - a) * DRIFT_CONSTANT.abs();
        gaps.push(Gap {
            block,
            interval: (a, b),
            midpoint: mid,
            min_abs,
            bound,
            certified: min_abs > 0.0 && min_abs >= bound,
        });
    }

    let positive: Vec<(f64, f64)> = eps
        .iter()
        .zip(&counts)
        .filter(|(_, c)| **c > 0)
        .map(|(e, c)| (*e, *c as f64))
        .collect();
    let count_exponent = loglog_slope(
        &positive.iter().map(|p| p.0).collect::<Vec<_>>(),
        &positive.iter().map(|p| p.1).collect::<Vec<_>>(),
    );
    let fit = |x: Vec<f64>, y: Vec<f64>| (x.len() >= 2).then(|| linear_fit(&x, &y).0);
    let gap_exponent = fit(
        gaps.iter().map(|g| g.midpoint.ln()).collect(),
        gaps.iter().map(|g| (g.interval.1 - g.interval.0).ln()).collect(),
    );
    let inverse_exponent = fit(
        gaps.iter().map(|g| g.midpoint.ln()).collect(),
        gaps.iter().map(|g| -g.min_abs.ln()).collect(),
    );
    Ok(EpsScanReport {
        eps,
        counts,
        crossings,
        gaps,
        count_exponent,
        gap_exponent,
        inverse_exponent,
    })
}

/// A resonant `ε` located by secant iteration.
#[derive(Debug, Clone, Serialize)]
pub struct Resonance {
    pub eps: f64,
    /// Eigenvalue of `(W J, W)` nearest zero at the ansatz.
    pub lambda: f64,
    /// `rel · ‖J‖∞`.
    pub threshold: f64,
    pub iterations: usize,
}

/// Refines a resonance bracketed by `(lo, hi)` until the Jacobian at the
/// ansatz has an eigenvalue below `rel · ‖J‖∞`.
pub fn refine_resonance(
    problem: &Problem,
    ansatz: &LayerAnsatz,
    bracket: (f64, f64),
    rel: f64,
    max_iter: usize,
) -> Result<Resonance> {
    let w = &problem.disc.weights;
    let eval = |e: f64| -> Result<(f64, f64)> {
        let u = ansatz_on_grid(ansatz, problem, e);
        let op = problem.jacobian(&u, e)?;
        let threshold = rel * operator_scale(&op.matrix, w);
        let lu = SparseLu::new(&op.matrix)?;
        Ok((nearest_zero_eigenvalue(&lu, w)?, threshold))
    };
    let (mut e0, mut e1) = bracket;
    let (mut l0, _) = eval(e0)?;
    let (mut l1, mut threshold) = eval(e1)?;
    for it in 0..max_iter {
        if l1.abs() < threshold {
            return Ok(Resonance {
                eps: e1,
                lambda: l1,
                threshold,
                iterations: it,
            });
        }
        if l1 == l0 {
            break;
        }
        let e2 = e1 - l1 * (e1 - e0) / (l1 - l0);
        (e0, l0) = (e1, l1);
        e1 = e2;
        (l1, threshold) = eval(e1)?;
    }
    if l1.abs() < threshold {
        return Ok(Resonance {
            eps: e1,
            lambda: l1,
            threshold,
            iterations: max_iter,
        });
    }
    Err(Error::InvalidInput(format!(
        "resonance refinement stalled at ε = {e1} with λ = {l1:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_partition() {
        let b = dyadic_blocks(0.02, 0.2);
        assert_eq!(b.len(), 4);
        assert!((b[0].0 - 0.1).abs() < 1e-15 && (b[0].1 - 0.2).abs() < 1e-15);
        assert!((b[3].0 - 0.02).abs() < 1e-15 && (b[3].1 - 0.025).abs() < 1e-15);
        assert_eq!(dyadic_blocks(0.025, 0.05).len(), 1);
    }

    #[test]
    fn crossing_identification() {
        let k = KSpectrum {
            values: vec![0.0, 9.0, 9.0, 16.0],
            vectors: Vec::new(),
            nodes: Vec::new(),
            b: Vec::new(),
            length: 1.0,
            weyl: None,
        };
        let mut c = Crossing {
            eps: 0.16,
            bracket: (0.159, 0.161),
            jump: 2,
            mode: None,
            predicted: None,
            rel_error: None,
        };
        identify(&mut c, &k);
        assert_eq!(c.mode, Some(1));
        assert!((c.predicted.unwrap() - SQRT_2 / 9.0).abs() < 1e-15);
    }
}
