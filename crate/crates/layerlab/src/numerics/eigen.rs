//! Symmetric eigensolvers: Sturm bisection for tridiagonal matrices, dense
//! solves through faer, and shift-invert block Lanczos for sparse pencils
//! `A x = λ M x` with diagonal positive `M`.

use super::sparse::{CsrMatrix, SparseLu};
use super::{dot, norm2};
use crate::error::{Error, Result};
use faer::{Mat, Side};

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `m` largest eigenvalues (descending) of a symmetric tridiagonal matrix.
pub fn tridiagonal_top(diag: &[f64], off: &[f64], m: usize) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (0..m.min(n))
        .map(|k| {
            // k-th largest = (n-1-k)-th smallest: count(<x) ≤ n-1-k ⇔ x ≤ value.
            let target = n - 1 - k;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(diag, off, mid) <= target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Dense symmetric eigen-decomposition of a row-major matrix; eigenvalues ascending,
/// eigenvectors as columns returned one per `Vec`.
pub fn dense_symmetric(a: &[f64], n: usize, vectors: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]));
    if !vectors {
        let vals = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::EigensolverStall {
                converged: 0,
                wanted: n,
            })?;
        return Ok((vals, Vec::new()));
    }
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigensolverStall {
        converged: 0,
        wanted: n,
    })?;
    let s = e.S();
    let u = e.U();
    let vals = (0..n).map(|i| s[i]).collect();
    let vecs = (0..n).map(|j| (0..n).map(|i| u[(i, j)]).collect()).collect();
    Ok((vals, vecs))
}

/// Deterministic pseudo-random numbers for start vectors.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform sample in `[-1, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

/// Options for [`eig_near_shift`].
#[derive(Debug, Clone)]
pub struct ShiftInvertOptions {
    pub sigma: f64,
    /// Minimum number of eigenpairs nearest `sigma`.
    pub count: usize,
    /// If set, keep going until every eigenvalue with `|λ − σ| ≤ window` is found.
    pub window: Option<f64>,
    pub block: usize,
    pub max_dim: usize,
    /// Relative Ritz residual tolerance on the inverted operator.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ShiftInvertOptions {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            count: 6,
            window: None,
            block: 4,
            max_dim: 240,
            tol: 1e-11,
            seed: 0x5EED,
        }
    }
}

/// Eigenpairs of the pencil, sorted by distance to the shift; vectors are
/// `M`-orthonormal.
#[derive(Debug, Clone)]
pub struct PencilEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub krylov_dim: usize,
}

/// Eigenvalues of `A x = λ diag(m) x` nearest `opts.sigma`.
pub fn eig_near_shift(a: &CsrMatrix, m: &[f64], opts: &ShiftInvertOptions) -> Result<PencilEigen> {
    let shifted = if opts.sigma == 0.0 {
        a.clone()
    } else {
        a.add_diagonal(&m.iter().map(|v| -opts.sigma * v).collect::<Vec<_>>())
    };
    let lu = SparseLu::new(&shifted)?;
    eig_near_shift_factored(&lu, m, opts)
}

/// Same as [`eig_near_shift`] with a precomputed factorization of `A − σM`.
pub fn eig_near_shift_factored(lu: &SparseLu, m: &[f64], opts: &ShiftInvertOptions) -> Result<PencilEigen> {
    let n = lu.n();
    let sq: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        let b: Vec<f64> = x.iter().zip(&sq).map(|(a, s)| a * s).collect();
        let y = lu.solve(&b);
        y.iter().zip(&sq).map(|(a, s)| a * s).collect()
    };
    let max_dim = opts.max_dim.min(n);
    let mut rng = SplitMix64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..opts.block.min(n) {
        let v: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        if let Some(q) = orthonormalize(v, &basis) {
            basis.push(q);
        }
    }
    // Column j of the projected matrix, rows 0..basis.len() at the time it was formed.
    let mut hcols: Vec<Vec<f64>> = Vec::new();
    let mut best_converged = 0;
    let mut wanted = opts.count;
    let mut j = 0;
    loop {
        let exhausted = j >= basis.len();
        if !exhausted {
            let mut w = apply(&basis[j]);
            let mut h = vec![0.0; basis.len()];
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &w);
                    h[i] += c;
                    w.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                }
            }
            let nw = norm2(&w);
            let scale = h.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1e-300);
            if nw > 1e-12 * scale && basis.len() < n {
                w.iter_mut().for_each(|x| *x /= nw);
                h.push(nw);
                basis.push(w);
            }
            hcols.push(h);
            j += 1;
        }
        let check = exhausted || j % opts.block == 0 || j >= max_dim;
        if !check {
            continue;
        }
        let k = j;
        let mut hk = vec![0.0; k * k];
        for c in 0..k {
            for r in 0..k.min(hcols[c].len()) {
                hk[r * k + c] = hcols[c][r];
            }
        }
        let sym: Vec<f64> = (0..k * k)
            .map(|idx| 0.5 * (hk[idx] + hk[(idx % k) * k + idx / k]))
            .collect();
        let (theta, svec) = dense_symmetric(&sym, k, true)?;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| theta[b].abs().partial_cmp(&theta[a].abs()).unwrap());
        let residual = |i: usize| -> f64 {
            let mut acc = 0.0;
            for r in k..basis.len() {
                let mut s = 0.0;
                for c in 0..k {
                    if r < hcols[c].len() {
                        s += hcols[c][r] * svec[i][c];
                    }
                }
                acc += s * s;
            }
            acc.sqrt()
        };
        let mut prefix = 0;
        let mut outside = false;
        for &i in &order {
            if residual(i) <= opts.tol * theta[i].abs() || exhausted {
                prefix += 1;
                if let Some(win) = opts.window {
                    if (1.0 / theta[i]).abs() > win {
                        outside = true;
                        break;
                    }
                }
            } else {
                break;
            }
        }
        best_converged = best_converged.max(prefix);
        if opts.window.is_some() && !outside && prefix >= wanted {
            wanted = prefix + opts.block;
        }
        let done = if opts.window.is_some() {
            outside && prefix >= opts.count
        } else {
            prefix >= wanted
        };
        if done || exhausted {
            let take = if opts.window.is_some() {
                order
                    .iter()
                    .take(prefix)
                    .filter(|&&i| (1.0 / theta[i]).abs() <= opts.window.unwrap())
                    .count()
                    .max(opts.count.min(prefix))
            } else {
                wanted.min(prefix)
            };
            if take < opts.count.min(n) {
                return Err(Error::EigensolverStall {
                    converged: prefix,
                    wanted: opts.count,
                });
            }
            let mut values = Vec::with_capacity(take);
            let mut vectors = Vec::with_capacity(take);
            for &i in order.iter().take(take) {
                values.push(opts.sigma + 1.0 / theta[i]);
                let mut x = vec![0.0; n];
                for c in 0..k {
                    let coef = svec[i][c];
                    x.iter_mut().zip(&basis[c]).for_each(|(a, b)| *a += coef * b);
                }
                x.iter_mut().zip(&sq).for_each(|(a, s)| *a /= s);
                vectors.push(x);
            }
            return Ok(PencilEigen {
                values,
                vectors,
                krylov_dim: k,
            });
        }
        if j >= max_dim {
            return Err(Error::EigensolverStall {
                converged: best_converged,
                wanted,
            });
        }
    }
}

fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n0 = norm2(&v);
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
    let nv = norm2(&v);
    if nv <= 1e-10 * n0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    Some(v)
}
