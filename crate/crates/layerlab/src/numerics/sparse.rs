//! Compressed sparse row matrices and a direct LU solver backed by faer.

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

/// Square sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn identity_diag(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            *yi = acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&k| self.col[k] == j)
            .map_or(0.0, |k| self.val[k])
    }

    /// `self + diag(d)`, keeping the pattern (diagonal entries are assumed present).
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, di) in d.iter().enumerate() {
            let k = (out.row_ptr[i]..out.row_ptr[i + 1])
                .find(|&k| out.col[k] == i)
                .expect("diagonal entry missing from pattern");
            out.val[k] += di;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.val.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self
            .val
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k];
                worst = worst.max((self.val[k] - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.val[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.val.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push(Triplet::new(i, self.col[k], self.val[k]));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::InvalidInput(format!("sparse assembly failed: {e:?}")))
    }

    /// Dense row-major copy (small matrices only).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i * self.n + self.col[k]] += self.val[k];
            }
        }
        d
    }
}

/// Sparse LU factorization with reusable symbolic analysis.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
    symbolic: SymbolicLu<usize>,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let m = a.to_faer()?;
        let symbolic =
            SymbolicLu::try_new(m.symbolic()).map_err(|e| Error::InvalidInput(format!("symbolic LU failed: {e:?}")))?;
        Self::with_symbolic(symbolic, &m, a.n)
    }

    /// Refactors a matrix with the same sparsity pattern.
    pub fn refactor(&self, a: &CsrMatrix) -> Result<Self> {
        let m = a.to_faer()?;
        Self::with_symbolic(self.symbolic.clone(), &m, a.n)
    }

    fn with_symbolic(symbolic: SymbolicLu<usize>, m: &SparseColMat<usize, f64>, n: usize) -> Result<Self> {
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), m.as_ref()).map_err(|_| Error::SingularJacobian {
            min_eig: 0.0,
            threshold: 0.0,
        })?;
        Ok(Self { n, lu, symbolic })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, -2.0));
            if i > 0 {
                t.push((i, i - 1, 1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0), (1, 1, 1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![3.0, 5.0]);
        assert!(m.symmetry_defect() > 0.5);
    }

    #[test]
    fn lu_solves_and_refactors() {
        let a = laplace_1d(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x);
        let lu = SparseLu::new(&a).unwrap();
        let y = lu.solve(&b);
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-10));
        let a2 = a.add_diagonal(&vec![-0.5; 50]);
        let lu2 = lu.refactor(&a2).unwrap();
        let y2 = lu2.solve(&a2.matvec(&x));
        assert!(x.iter().zip(&y2).all(|(p, q)| (p - q).abs() < 1e-10));
    }
}
