//! Finite-difference weights, Lagrange interpolation and Neville extrapolation.

/// Fornberg's algorithm: weights `c[d][j]` such that
/// `f^(d)(z) ≈ Σ_j c[d][j] f(x[j])` for all derivative orders `d ≤ m`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Centered stencil offsets `-p..=p` and weights (unit spacing) for the
/// `d`-th derivative with formal accuracy at least `accuracy`.
pub fn centered_weights(d: usize, accuracy: usize) -> (Vec<i64>, Vec<f64>) {
    let order = |p: usize| {
        let r = 2 * p + 1 - d.min(2 * p + 1);
        r + r % 2
    };
    let p = (d.div_ceil(2)..)
        .find(|&p| 2 * p + 1 > d && order(p) >= accuracy)
        .unwrap() as i64;
    let offsets: Vec<i64> = (-p..=p).collect();
    let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let w = fornberg(0.0, &xs, d).swap_remove(d);
    (offsets, w)
}

/// Index of the first node of a `width`-point stencil around `t` on a uniform
/// grid `x0 + i h`, `i < n`, clamped to the grid.
pub fn stencil_start(t: f64, x0: f64, h: f64, n: usize, width: usize) -> usize {
    let i = ((t - x0) / h).floor() as i64 - (width as i64 / 2 - 1);
    i.clamp(0, n as i64 - width as i64) as usize
}

/// Lagrange basis weights at `t` for nodes `x`.
pub fn lagrange_weights(x: &[f64], t: f64) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![1.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        for j in 0..n {
            if i != j {
                *wi *= (t - x[j]) / (x[i] - x[j]);
            }
        }
    }
    w
}

/// Polynomial through `(x, y)` evaluated at `t` by Neville's scheme.
pub fn neville(x: &[f64], y: &[f64], t: f64) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = ((t - x[i + k]) * p[i] + (x[i] - t) * p[i + 1]) / (x[i] - x[i + k]);
        }
    }
    p[0]
}

/// Uniform line of nodes `x0 + i h` with local polynomial interpolation.
#[derive(Debug, Clone, Copy)]
pub struct UniformAxis {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl UniformAxis {
    /// Stencil start and Lagrange weights for a `width`-point interpolant at `t`.
    pub fn stencil(&self, t: f64, width: usize) -> (usize, Vec<f64>) {
        let start = stencil_start(t, self.x0, self.h, self.n, width);
        let xs: Vec<f64> = (0..width).map(|k| self.x0 + (start + k) as f64 * self.h).collect();
        (start, lagrange_weights(&xs, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_derivative_three_point() {
        let (off, w) = centered_weights(2, 2);
        assert_eq!(off, vec![-1, 0, 1]);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn eighth_order_first_derivative_of_sine() {
        let (off, w) = centered_weights(1, 8);
        let h = 0.05;
        let d: f64 = off
            .iter()
            .zip(&w)
            .map(|(&o, c)| c * (0.3 + o as f64 * h).sin())
            .sum::<f64>()
            / h;
        assert!((d - 0.3f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn neville_is_exact_on_cubics() {
        let x = [0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - t + 3.0 * t * t - t * t * t).collect();
        assert!((neville(&x, &y, 0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lagrange_interpolates_quintic() {
        let ax = UniformAxis {
            x0: -1.0,
            h: 0.1,
            n: 21,
        };
        let (s, w) = ax.stencil(0.337, 6);
        let f = |t: f64| t.powi(5) - t;
        let v: f64 = w
            .iter()
            .enumerate()
            .map(|(k, c)| c * f(-1.0 + (s + k) as f64 * 0.1))
            .sum();
        assert!((v - f(0.337)).abs() < 1e-13);
    }
}
