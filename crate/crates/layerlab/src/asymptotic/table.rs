//! Tables sampled on the `(y, s)` product grid and their derivatives.

use crate::numerics::fourier::{apply_along_rows, diff_matrix};
use crate::profile::{d1, d2, Stencil};

/// Row-major table: one row of `ns` line values per interface node.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub ny: usize,
    pub ns: usize,
    pub data: Vec<f64>,
}

impl Table {
    pub fn zeros(ny: usize, ns: usize) -> Self {
        Self {
            ny,
            ns,
            data: vec![0.0; ny * ns],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let ny = rows.len();
        let ns = rows.first().map_or(0, Vec::len);
        Self {
            ny,
            ns,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.ns..(j + 1) * self.ns]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.ns..(j + 1) * self.ns]
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.ns + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Spectral differentiation along the periodic interface coordinate.
#[derive(Debug, Clone)]
pub struct InterfaceDiff {
    pub n: usize,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl InterfaceDiff {
    /// `period` is the interface length; a single node means no `y`-dependence.
    pub fn new(n: usize, period: f64) -> Self {
        if n <= 1 || period <= 0.0 {
            return Self {
                n,
                d1: Vec::new(),
                d2: Vec::new(),
            };
        }
        Self {
            n,
            d1: diff_matrix(n, period, 1),
            d2: diff_matrix(n, period, 2),
        }
    }

    fn apply(&self, d: &[f64], data: &[f64], m: usize) -> Vec<f64> {
        if d.is_empty() {
            vec![0.0; data.len()]
        } else {
            apply_along_rows(d, data, self.n, m)
        }
    }

    pub fn dy(&self, v: &[f64]) -> Vec<f64> {
        self.apply(&self.d1, v, 1)
    }

    pub fn dyy(&self, v: &[f64]) -> Vec<f64> {
        self.apply(&self.d2, v, 1)
    }

    pub fn table_dy(&self, t: &Table) -> Table {
        Table {
            ny: t.ny,
            ns: t.ns,
            data: self.apply(&self.d1, &t.data, t.ns),
        }
    }

    pub fn table_dyy(&self, t: &Table) -> Table {
        Table {
            ny: t.ny,
            ns: t.ns,
            data: self.apply(&self.d2, &t.data, t.ns),
        }
    }
}

/// A table with all derivatives needed by the residual in `(y, s)` variables.
#[derive(Debug, Clone)]
pub struct TableDerivs {
    pub v: Table,
    pub s: Table,
    pub ss: Table,
    pub y: Table,
    pub yy: Table,
    pub ys: Table,
}

impl TableDerivs {
    pub fn new(t: &Table, hs: f64, stencil: Stencil, ydiff: &InterfaceDiff) -> Self {
        let map_rows = |f: &dyn Fn(&[f64]) -> Vec<f64>| Table::from_rows((0..t.ny).map(|j| f(t.row(j))).collect());
        let s = map_rows(&|r| d1(r, hs, stencil));
        let ss = map_rows(&|r| d2(r, hs, stencil));
        let y = ydiff.table_dy(t);
        let yy = ydiff.table_dyy(t);
        let ys = ydiff.table_dy(&s);
        Self {
            v: t.clone(),
            s,
            ss,
            y,
            yy,
            ys,
        }
    }
}

/// `Φ_i(y)` with its first two `y`-derivatives.
#[derive(Debug, Clone)]
pub struct ShiftDerivs {
    pub v: Vec<f64>,
    pub y: Vec<f64>,
    pub yy: Vec<f64>,
}

impl ShiftDerivs {
    pub fn new(v: &[f64], ydiff: &InterfaceDiff) -> Self {
        Self {
            v: v.to_vec(),
            y: ydiff.dy(v),
            yy: ydiff.dyy(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivatives_of_separable_table() {
        let (ny, ns, hs) = (16, 201, 0.05);
        let period = 2.0 * PI;
        let rows: Vec<Vec<f64>> = (0..ny)
            .map(|j| {
                let y = j as f64 * period / ny as f64;
                (0..ns)
                    .map(|i| {
                        let s = (i as f64 - 100.0) * hs;
                        y.sin() * (-s * s).exp()
                    })
                    .collect()
            })
            .collect();
        let t = Table::from_rows(rows);
        let d = TableDerivs::new(&t, hs, Stencil::Fourth, &InterfaceDiff::new(ny, period));
        let (j, i) = (3, 110);
        let y = j as f64 * period / ny as f64;
        let s = 10.0 * hs;
        let g = (-s * s).exp();
        assert!((d.y.get(j, i) - y.cos() * g).abs() < 1e-12);
        assert!((d.yy.get(j, i) + y.sin() * g).abs() < 1e-12);
        assert!((d.s.get(j, i) + 2.0 * s * y.sin() * g).abs() < 1e-4);
        assert!((d.ys.get(j, i) + 2.0 * s * y.cos() * g).abs() < 1e-4);
        assert!((d.ss.get(j, i) - (4.0 * s * s - 2.0) * y.sin() * g).abs() < 1e-4);
    }
}
