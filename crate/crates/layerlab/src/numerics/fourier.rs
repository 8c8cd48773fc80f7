//! Fourier differentiation on uniform periodic grids.

use faer::{Mat, MatRef};
use std::f64::consts::PI;

/// Dense periodic differentiation matrix of order 1 or 2, row-major,
/// for `n` nodes `j L / n`.
pub fn diff_matrix(n: usize, period: f64, order: u32) -> Vec<f64> {
    assert!(order == 1 || order == 2, "only first and second derivatives");
    let h = period / n as f64;
    let half = if n.is_multiple_of(2) { n / 2 - 1 } else { (n - 1) / 2 };
    let c: Vec<f64> = (0..n)
        .map(|d| {
            let mut acc = 0.0;
            for m in 1..=half {
                let k = 2.0 * PI * m as f64 / period;
                let arg = k * d as f64 * h;
                acc += if order == 1 { -k * arg.sin() } else { -k * k * arg.cos() };
            }
            acc *= 2.0;
            if order == 2 && n.is_multiple_of(2) {
                let k = PI * n as f64 / period;
                acc -= k * k * if d % 2 == 0 { 1.0 } else { -1.0 };
            }
            acc / n as f64
        })
        .collect();
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            out[j * n + k] = c[(j + n - k) % n];
        }
    }
    out
}

/// `D · T` for a row-major `n × m` table `T` (differentiation along rows' index).
pub fn apply_along_rows(d: &[f64], table: &[f64], n: usize, m: usize) -> Vec<f64> {
    let dm = MatRef::from_row_major_slice(d, n, n);
    let tm = MatRef::from_row_major_slice(table, n, m);
    let r: Mat<f64> = dm * tm;
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            out[i * m + j] = r[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(n: usize) {
        let period = 4.0 * PI;
        let y: Vec<f64> = (0..n).map(|j| j as f64 * period / n as f64).collect();
        let f: Vec<f64> = y.iter().map(|t| (1.5 * t).sin() + (0.5 * t).cos()).collect();
        let d1 = diff_matrix(n, period, 1);
        let d2 = diff_matrix(n, period, 2);
        let g1 = apply_along_rows(&d1, &f, n, 1);
        let g2 = apply_along_rows(&d2, &f, n, 1);
        for (j, t) in y.iter().enumerate() {
            assert!((g1[j] - (1.5 * (1.5 * t).cos() - 0.5 * (0.5 * t).sin())).abs() < 1e-10);
            assert!((g2[j] + 2.25 * (1.5 * t).sin() + 0.25 * (0.5 * t).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_on_band_limited_even_and_odd() {
        check(32);
        check(33);
    }
}
