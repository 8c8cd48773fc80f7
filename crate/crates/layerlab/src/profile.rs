//! The heteroclinic profile `H(s) = tanh(s/√2)`, the model operator
//! `L₀ = ∂²_s + 1 − 3H²` on a truncated line, and a bordered solver for
//! `L₀u = f` under the constraint `∫uH′ = 0`.

use crate::error::{Error, Result};
use crate::numerics::eigen::tridiagonal_top;
use crate::numerics::sparse::{CsrMatrix, SparseLu};
use crate::numerics::{norm_inf, trapz};
use std::f64::consts::SQRT_2;

pub fn h(s: f64) -> f64 {
    (s / SQRT_2).tanh()
}

pub fn h_prime(s: f64) -> f64 {
    let t = h(s);
    (1.0 - t * t) / SQRT_2
}

pub fn h_second(s: f64) -> f64 {
    let t = h(s);
    -t * (1.0 - t * t)
}

pub fn h_third(s: f64) -> f64 {
    let t = h(s);
    (1.0 - t * t) * (3.0 * t * t - 1.0) / SQRT_2
}

/// Uniform grid on `[−S, S]` with an odd number of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    pub half_length: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if half_length < 15.0 {
            return Err(Error::InvalidInput(format!("line half-length {half_length} < 15")));
        }
        if n.is_multiple_of(2) || n < 9 {
            return Err(Error::InvalidInput(format!(
                "line grid needs an odd node count ≥ 9, got {n}"
            )));
        }
        Ok(Self { half_length, n })
    }

    /// Grid with spacing `h` (rounded so that the node count is odd).
    pub fn with_spacing(half_length: f64, h: f64) -> Result<Self> {
        let cells = (2.0 * half_length / h).round() as usize;
        Self::new(half_length, cells + 1 + (cells % 2))
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.n - 1) as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.s(i)).collect()
    }

    /// Index of `s = 0`.
    pub fn center(&self) -> usize {
        self.n / 2
    }
}

impl Default for LineGrid {
    fn default() -> Self {
        Self {
            half_length: 20.0,
            n: 4001,
        }
    }
}

/// `H` and its derivatives sampled on a line grid.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub grid: LineGrid,
    pub s: Vec<f64>,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    pub d2h: Vec<f64>,
    pub one_minus_h2: Vec<f64>,
    /// `A₀` in `1 − H(s) ≈ A₀ e^{−√2 s}`, fitted on the tail.
    pub decay_constant: f64,
}

impl ProfileTable {
    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    /// `∫ f` by the trapezoidal rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        trapz(f, self.spacing())
    }

    /// `∫ f H′`.
    pub fn project(&self, f: &[f64]) -> f64 {
        let p: Vec<f64> = f.iter().zip(&self.dh).map(|(a, b)| a * b).collect();
        self.integrate(&p)
    }

    pub fn integrals(&self) -> ProfileIntegrals {
        let prod = |f: &dyn Fn(usize) -> f64| self.integrate(&(0..self.grid.n).map(f).collect::<Vec<_>>());
        ProfileIntegrals {
            hp2: prod(&|i| self.dh[i] * self.dh[i]),
            hp_one_minus_h2: prod(&|i| self.dh[i] * self.one_minus_h2[i]),
            s_h_hp2: prod(&|i| self.s[i] * self.h[i] * self.dh[i] * self.dh[i]),
        }
    }
}

/// Quadratures of the profile that enter the solvability conditions.
#[derive(Debug, Clone, Copy)]
pub struct ProfileIntegrals {
    /// `∫H′² = 2√2/3`.
    pub hp2: f64,
    /// `∫H′(1 − H²) = 4/3`.
    pub hp_one_minus_h2: f64,
    /// `∫sHH′² = 1/3`.
    pub s_h_hp2: f64,
}

/// Closed-form evaluation of the heteroclinic on `grid`.
pub fn heteroclinic(grid: LineGrid) -> ProfileTable {
    let s = grid.nodes();
    let hv: Vec<f64> = s.iter().map(|&t| h(t)).collect();
    let dh: Vec<f64> = s.iter().map(|&t| h_prime(t)).collect();
    let d2h: Vec<f64> = s.iter().map(|&t| h_second(t)).collect();
    let one_minus_h2: Vec<f64> = s.iter().map(|&t| 2.0 / (1.0 + (SQRT_2 * t).cosh())).collect();
    // 1 − H = (1 − H²)/(1 + H) avoids cancellation deep in the tail.
    let tail: Vec<f64> = (0..grid.n)
        .filter(|&i| (14.0..=16.0).contains(&s[i]))
        .map(|i| one_minus_h2[i] / (1.0 + hv[i]) * (SQRT_2 * s[i]).exp())
        .collect();
    let decay_constant = tail.iter().sum::<f64>() / tail.len() as f64;
    ProfileTable {
        grid,
        s,
        h: hv,
        dh,
        d2h,
        one_minus_h2,
        decay_constant,
    }
}

/// Finite-difference order of the discrete `L₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Second,
    Fourth,
}

fn stencil_coeffs(stencil: Stencil) -> &'static [(i64, f64)] {
    match stencil {
        Stencil::Second => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        Stencil::Fourth => &[
            (-2, -1.0 / 12.0),
            (-1, 16.0 / 12.0),
            (0, -30.0 / 12.0),
            (1, 16.0 / 12.0),
            (2, -1.0 / 12.0),
        ],
    }
}

/// Second derivative with homogeneous Dirichlet data beyond the grid ends.
pub fn d2(u: &[f64], h: f64, stencil: Stencil) -> Vec<f64> {
    let n = u.len() as i64;
    let coeffs = stencil_coeffs(stencil);
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                return 0.0;
            }
            coeffs
                .iter()
                .map(|&(o, c)| {
                    let k = i + o;
                    if (0..n).contains(&k) {
                        c * u[k as usize]
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                / (h * h)
        })
        .collect()
}

/// First derivative, centered, with zero values beyond the grid ends.
pub fn d1(u: &[f64], h: f64, stencil: Stencil) -> Vec<f64> {
    let n = u.len() as i64;
    let at = |k: i64| if (0..n).contains(&k) { u[k as usize] } else { 0.0 };
    (0..n)
        .map(|i| match stencil {
            Stencil::Second => (at(i + 1) - at(i - 1)) / (2.0 * h),
            Stencil::Fourth => (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h),
        })
        .collect()
}

/// Second-order `L₀u`; endpoint values are set to zero.
pub fn l0_apply(u: &[f64], profile: &ProfileTable) -> Vec<f64> {
    l0_apply_with(u, profile, Stencil::Second)
}

pub fn l0_apply_with(u: &[f64], profile: &ProfileTable, stencil: Stencil) -> Vec<f64> {
    let mut out = d2(u, profile.spacing(), stencil);
    let n = u.len();
    for i in 1..n - 1 {
        out[i] += (1.0 - 3.0 * profile.h[i] * profile.h[i]) * u[i];
    }
    out
}

/// The `m` largest eigenvalues of the second-order Dirichlet `L₀`.
pub fn l0_spectrum(profile: &ProfileTable, m: usize) -> Vec<f64> {
    let hs = profile.spacing();
    let n = profile.grid.n;
    let diag: Vec<f64> = (1..n - 1)
        .map(|i| -2.0 / (hs * hs) + 1.0 - 3.0 * profile.h[i] * profile.h[i])
        .collect();
    let off = vec![1.0 / (hs * hs); n - 3];
    tridiagonal_top(&diag, &off, m)
}

/// Result of a constrained solve.
#[derive(Debug, Clone)]
pub struct FredholmSolution {
    /// Solution on the full grid (zero at `±S`), with `∫uH′ = 0`.
    pub u: Vec<f64>,
    /// `∫fH′ / ∫H′²`.
    pub defect: f64,
    /// Residual Lagrange multiplier of the bordered system (discretization size).
    pub multiplier: f64,
}

/// Factored bordered system `[L₀ H′; (wH′)ᵀ 0]`, reusable for many right sides.
pub struct FredholmSolver {
    profile: ProfileTable,
    stencil: Stencil,
    matrix: CsrMatrix,
    lu: SparseLu,
    hp2: f64,
}

impl FredholmSolver {
    pub fn new(profile: &ProfileTable, stencil: Stencil) -> Result<Self> {
        let n = profile.grid.n;
        let m = n - 2;
        let hs = profile.spacing();
        let mut t = Vec::with_capacity(6 * m);
        for k in 0..m {
            let i = k + 1;
            for &(o, c) in stencil_coeffs(stencil) {
                let kk = k as i64 + o;
                if (0..m as i64).contains(&kk) {
                    t.push((k, kk as usize, c / (hs * hs)));
                }
            }
            t.push((k, k, 1.0 - 3.0 * profile.h[i] * profile.h[i]));
            t.push((k, m, profile.dh[i]));
            t.push((m, k, hs * profile.dh[i]));
        }
        // Keeps the diagonal entry of the constraint row in the pattern.
        t.push((m, m, 0.0));
        let matrix = CsrMatrix::from_triplets(m + 1, t);
        let lu = SparseLu::new(&matrix)?;
        let hp2 = profile.project(&profile.dh);
        Ok(Self {
            profile: profile.clone(),
            stencil,
            matrix,
            lu,
            hp2,
        })
    }

    pub fn profile(&self) -> &ProfileTable {
        &self.profile
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// `∫fH′ / ∫H′²` by trapezoidal quadrature.
    pub fn defect(&self, f: &[f64]) -> f64 {
        self.profile.project(f) / self.hp2
    }

    /// Solves `L₀u = f − defect·H′`, `∫uH′ = 0`.
    pub fn solve(&self, f: &[f64]) -> Result<FredholmSolution> {
        let n = self.profile.grid.n;
        if f.len() != n {
            return Err(Error::InvalidInput(format!(
                "right side has {} nodes, grid has {n}",
                f.len()
            )));
        }
        let tail = f[0].abs().max(f[n - 1].abs());
        if tail >= 1e-8 * norm_inf(f).max(1.0) {
            return Err(Error::InvalidInput(format!(
                "right side does not decay at ±S (|f| = {tail:e})"
            )));
        }
        let defect = self.defect(f);
        let mut rhs: Vec<f64> = (1..n - 1).map(|i| f[i] - defect * self.profile.dh[i]).collect();
        rhs.push(0.0);
        let x = self.lu.solve(&rhs);
        let r = self.matrix.matvec(&x);
        let res = r.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !(res <= 1e-10 * norm_inf(&rhs).max(1.0)) {
            return Err(Error::IllConditioned { residual: res });
        }
        let mut u = vec![0.0; n];
        u[1..n - 1].copy_from_slice(&x[..n - 2]);
        Ok(FredholmSolution {
            u,
            defect,
            multiplier: x[n - 2],
        })
    }
}

/// One-shot second-order constrained solve: returns `(u, defect)`.
pub fn l0_solve(f: &[f64], profile: &ProfileTable) -> Result<(Vec<f64>, f64)> {
    let sol = FredholmSolver::new(profile, Stencil::Second)?.solve(f)?;
    Ok((sol.u, sol.defect))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigen::SplitMix64;

    fn table() -> ProfileTable {
        heteroclinic(LineGrid::default())
    }

    #[test]
    fn grid_validation() {
        assert!(LineGrid::new(10.0, 101).is_err());
        assert!(LineGrid::new(20.0, 100).is_err());
        let g = LineGrid::with_spacing(20.0, 0.01).unwrap();
        assert_eq!(g.n, 4001);
        assert_eq!(g.s(g.center()), 0.0);
    }

    #[test]
    fn heteroclinic_values_and_identities() {
        let p = table();
        let c = p.grid.center();
        assert_eq!(p.h[c], 0.0);
        assert!((p.dh[c] - 1.0 / SQRT_2).abs() < 1e-15);
        assert!((p.decay_constant - 2.0).abs() < 1e-8);
        for i in 0..p.grid.n {
            assert!(p.h[i].abs() < 1.0);
            assert!((p.dh[i] - p.one_minus_h2[i] / SQRT_2).abs() < 1e-14);
            // H'' + H − H³ = 0.
            assert!((p.d2h[i] + p.h[i] - p.h[i].powi(3)).abs() < 1e-13);
            let j = p.grid.n - 1 - i;
            assert!((p.h[i] + p.h[j]).abs() < 1e-15 && (p.dh[i] - p.dh[j]).abs() < 1e-15);
            if p.s[i] > 10.0 {
                assert!(((1.0 - p.h[i]) - 2.0 * (-SQRT_2 * p.s[i]).exp()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn profile_quadratures() {
        let q = table().integrals();
        assert!((q.hp2 - 2.0 * SQRT_2 / 3.0).abs() < 1e-10);
        assert!((q.hp_one_minus_h2 - 4.0 / 3.0).abs() < 1e-10);
        assert!((q.s_h_hp2 - 1.0 / 3.0).abs() < 1e-10);
        assert!((4.0 * q.s_h_hp2 / q.hp2 - SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn l0_annihilates_translation_mode() {
        let p = table();
        let r = l0_apply(&p.dh, &p);
        assert!(norm_inf(&r) < 1e-3);
        assert!(norm_inf(&l0_apply(&vec![0.0; p.grid.n], &p)) == 0.0);
        let r4 = l0_apply_with(&p.dh, &p, Stencil::Fourth);
        assert!(norm_inf(&r4) < 1e-8);
    }

    #[test]
    fn l0_of_h_hprime() {
        let p = table();
        let u: Vec<f64> = (0..p.grid.n).map(|i| p.h[i] * p.dh[i]).collect();
        let r = l0_apply(&u, &p);
        let err = (0..p.grid.n)
            .map(|i| (r[i] + 3.0 * SQRT_2 * p.h[i] * p.dh[i] * p.dh[i]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn spectrum_of_l0() {
        let p = table();
        let ev = l0_spectrum(&p, 3);
        assert!(ev[0].abs() < 1e-5, "{}", ev[0]);
        assert!((ev[1] + 1.5).abs() < 1e-3, "{}", ev[1]);
        assert!(ev[2] <= -2.0 + 1e-2);
    }

    #[test]
    fn second_eigenvalue_converges_at_second_order() {
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| {
                let p = heteroclinic(LineGrid::with_spacing(20.0, h).unwrap());
                (l0_spectrum(&p, 2)[1] + 1.5).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn solve_parallel_to_kernel() {
        let p = table();
        let (u, defect) = l0_solve(&p.dh, &p).unwrap();
        assert!((defect - 1.0).abs() < 1e-12);
        assert!(norm_inf(&u) < 1e-6);
    }

    #[test]
    fn solve_inverts_h_hprime_identity() {
        let p = table();
        let f: Vec<f64> = (0..p.grid.n)
            .map(|i| -3.0 * SQRT_2 * p.h[i] * p.dh[i] * p.dh[i])
            .collect();
        let (u, defect) = l0_solve(&f, &p).unwrap();
        assert!(defect.abs() < 1e-14);
        let err = (0..p.grid.n)
            .map(|i| (u[i] - p.h[i] * p.dh[i]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn solve_round_trip_for_flat_first_order_right_side() {
        let p = table();
        let f: Vec<f64> = (0..p.grid.n).map(|i| SQRT_2 * p.s[i] * p.dh[i]).collect();
        let (u, defect) = l0_solve(&f, &p).unwrap();
        assert!(defect.abs() < 1e-14);
        let back = l0_apply(&u, &p);
        let err = (1..p.grid.n - 1).map(|i| (back[i] - f[i]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(p.project(&u).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_border_is_negligible() {
        let p = table();
        let solver = FredholmSolver::new(&p, Stencil::Fourth).unwrap();
        let f: Vec<f64> = (0..p.grid.n).map(|i| p.s[i] * p.one_minus_h2[i]).collect();
        let sol = solver.solve(&f).unwrap();
        assert!(sol.multiplier.abs() < 1e-8, "{}", sol.multiplier);
    }

    #[test]
    fn fredholm_round_trip_and_stability_on_random_data() {
        let p = table();
        let solver = FredholmSolver::new(&p, Stencil::Second).unwrap();
        let hs = p.spacing();
        let mut rng = SplitMix64(7);
        let mut worst = 0.0_f64;
        for _ in 0..10 {
            let amps: Vec<f64> = (0..6).map(|_| rng.next_f64()).collect();
            let mut f: Vec<f64> =
                p.s.iter()
                    .map(|&s| {
                        let bump = if s.abs() < 8.0 {
                            (1.0 - (s / 8.0).powi(2)).powi(4)
                        } else {
                            0.0
                        };
                        bump * amps
                            .iter()
                            .enumerate()
                            .map(|(k, a)| a * (0.7 * k as f64 * s).cos())
                            .sum::<f64>()
                    })
                    .collect();
            let d = solver.defect(&f);
            f.iter_mut().zip(&p.dh).for_each(|(a, b)| *a -= d * b);
            let sol = solver.solve(&f).unwrap();
            let back = l0_apply(&sol.u, &p);
            let err = (1..p.grid.n - 1).map(|i| (back[i] - f[i]).abs()).fold(0.0, f64::max);
            assert!(err < 1e-4, "{err}");
            let du: Vec<f64> = d1(&sol.u, hs, Stencil::Second);
            let h1 = (p.integrate(&sol.u.iter().map(|v| v * v).collect::<Vec<_>>())
                + p.integrate(&du.iter().map(|v| v * v).collect::<Vec<_>>()))
            .sqrt();
            let l2 = p.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
            worst = worst.max(h1 / l2);
        }
        assert!(worst < 2.0, "stability constant {worst}");
    }

    #[test]
    fn l0_is_self_adjoint() {
        let p = table();
        let mut rng = SplitMix64(3);
        let mut rand_fn = || -> Vec<f64> {
            let a: Vec<f64> = (0..4).map(|_| rng.next_f64()).collect();
            p.s.iter()
                .map(|&s| (-(s * s) / 20.0).exp() * (a[0] + a[1] * s + a[2] * (s * a[3]).sin()))
                .collect()
        };
        let (u, v) = (rand_fn(), rand_fn());
        let lu = l0_apply(&u, &p);
        let lv = l0_apply(&v, &p);
        let a: f64 = lu.iter().zip(&v).map(|(x, y)| x * y).sum();
        let b: f64 = u.iter().zip(&lv).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() * p.spacing() < 1e-10);
    }
}
