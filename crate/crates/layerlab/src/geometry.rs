//! Domains, interfaces, Fermi coordinates and the coefficient field `a`.
//!
//! Points are stored as `[f64; 2]`. On an interval only the first entry is
//! used; on a periodic strip the entries are `(y, z)` with the interface at
//! `z = 0`; radial domains use Cartesian coordinates of a meridian plane.
//!
//! The normal coordinate `ζ` is oriented so that `a > 0` where `ζ > 0`, and
//! `b = ∂a/∂ζ` on the interface is positive. The raw distance `ρ` (`x − x₀`,
//! `z` or `r − R₀`) is related to it by `ζ = σρ` with `σ = ±1`.

use crate::error::{Error, Result};
use crate::numerics::interp::centered_weights;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point = [f64; 2];

/// The interface `K` where the layer concentrates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterfaceSpec {
    /// A point `x₀` of an interval.
    Point { location: f64 },
    /// The line `z = 0` of a strip periodic in `y` with period `L`.
    PeriodicLine { period: f64 },
    /// A circle (or sphere in radial reduction) of radius `R₀`.
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

impl InterfaceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InterfaceSpec::Point { location } if location.is_finite() => Ok(()),
            InterfaceSpec::PeriodicLine { period } if period > 0.0 => Ok(()),
            InterfaceSpec::Circle { radius, .. } if radius > 0.0 => Ok(()),
            other => Err(Error::InvalidInput(format!("degenerate interface {other:?}"))),
        }
    }

    /// Signed raw distance `ρ`: `x − x₀`, `z`, or `|x − c| − R₀`.
    pub fn raw_distance(&self, x: Point) -> f64 {
        match *self {
            InterfaceSpec::Point { location } => x[0] - location,
            InterfaceSpec::PeriodicLine { .. } => x[1],
            InterfaceSpec::Circle { radius, center } => (x[0] - center[0]).hypot(x[1] - center[1]) - radius,
        }
    }

    /// Arc-length coordinate of the foot point of `x`.
    pub fn tangential(&self, x: Point) -> f64 {
        match *self {
            InterfaceSpec::Point { .. } => 0.0,
            InterfaceSpec::PeriodicLine { period } => x[0].rem_euclid(period),
            InterfaceSpec::Circle { radius, center } => {
                (radius * (x[1] - center[1]).atan2(x[0] - center[0])).rem_euclid(2.0 * PI * radius)
            }
        }
    }

    /// The point at arc length `y` and raw distance `ρ`.
    pub fn point_at(&self, y: f64, rho: f64) -> Point {
        match *self {
            InterfaceSpec::Point { location } => [location + rho, 0.0],
            InterfaceSpec::PeriodicLine { .. } => [y, rho],
            InterfaceSpec::Circle { radius, center } => {
                let t = y / radius;
                [
                    center[0] + (radius + rho) * t.cos(),
                    center[1] + (radius + rho) * t.sin(),
                ]
            }
        }
    }

    /// Length of `K` (zero for a point).
    pub fn length(&self) -> f64 {
        match *self {
            InterfaceSpec::Point { .. } => 0.0,
            InterfaceSpec::PeriodicLine { period } => period,
            InterfaceSpec::Circle { radius, .. } => 2.0 * PI * radius,
        }
    }

    /// Mean curvature with respect to the raw outward direction (`+ρ`).
    pub fn raw_curvature(&self, dim: usize) -> f64 {
        match *self {
            InterfaceSpec::Circle { radius, .. } => (dim as f64 - 1.0) / radius,
            _ => 0.0,
        }
    }

    fn radius(&self) -> Option<f64> {
        match *self {
            InterfaceSpec::Circle { radius, .. } => Some(radius),
            _ => None,
        }
    }
}

/// The domain `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { lo: f64, hi: f64 },
    PeriodicStrip { period: f64, z_lo: f64, z_hi: f64 },
    RadialAnnulus { r_in: f64, r_out: f64, dim: usize },
    RadialDisk { r_out: f64, dim: usize },
}

impl DomainSpec {
    pub fn dimension(&self) -> usize {
        match *self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::PeriodicStrip { .. } => 2,
            DomainSpec::RadialAnnulus { dim, .. } | DomainSpec::RadialDisk { dim, .. } => dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Interval { lo, hi } => lo < hi,
            DomainSpec::PeriodicStrip { period, z_lo, z_hi } => period > 0.0 && z_lo < z_hi,
            DomainSpec::RadialAnnulus { r_in, r_out, dim } => r_in >= 0.0 && r_in < r_out && dim >= 2,
            DomainSpec::RadialDisk { r_out, dim } => r_out > 0.0 && dim >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid domain extents {self:?}")))
        }
    }

    /// Checks that `interface` is of the matching kind and lies strictly inside.
    pub fn check_interface(&self, interface: &InterfaceSpec) -> Result<()> {
        self.validate()?;
        interface.validate()?;
        let compatible = match (self, interface) {
            (DomainSpec::Interval { .. }, InterfaceSpec::Point { .. }) => true,
            (DomainSpec::PeriodicStrip { period, .. }, InterfaceSpec::PeriodicLine { period: p }) => {
                (period - p).abs() <= 1e-12 * period
            }
            (
                DomainSpec::RadialAnnulus { .. } | DomainSpec::RadialDisk { .. },
                InterfaceSpec::Circle { center, .. },
            ) => center == &[0.0, 0.0],
            _ => false,
        };
        if !compatible {
            return Err(Error::InvalidInput(format!(
                "interface {interface:?} does not fit domain {self:?}"
            )));
        }
        if self.boundary_distance(interface) <= 0.0 {
            return Err(Error::InvalidInput("interface touches the boundary".into()));
        }
        Ok(())
    }

    /// Distance from `K` to `∂Ω`.
    pub fn boundary_distance(&self, interface: &InterfaceSpec) -> f64 {
        match (*self, *interface) {
            (DomainSpec::Interval { lo, hi }, InterfaceSpec::Point { location }) => (location - lo).min(hi - location),
            (DomainSpec::PeriodicStrip { z_lo, z_hi, .. }, _) => (-z_lo).min(z_hi),
            (DomainSpec::RadialAnnulus { r_in, r_out, .. }, InterfaceSpec::Circle { radius, .. }) => {
                (radius - r_in).min(r_out - radius)
            }
            (DomainSpec::RadialDisk { r_out, .. }, InterfaceSpec::Circle { radius, .. }) => r_out - radius,
            _ => 0.0,
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        match *self {
            DomainSpec::Interval { lo, hi } => (lo..=hi).contains(&x[0]),
            DomainSpec::PeriodicStrip { z_lo, z_hi, .. } => (z_lo..=z_hi).contains(&x[1]),
            DomainSpec::RadialAnnulus { r_in, r_out, .. } => (r_in..=r_out).contains(&x[0].hypot(x[1])),
            DomainSpec::RadialDisk { r_out, .. } => x[0].hypot(x[1]) <= r_out,
        }
    }
}

/// Closed-form coefficient fields, written in raw Fermi variables `(y, ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `a = slope · ρ`.
    Linear { slope: f64 },
    /// `a = slope · (r − R₀)`; same as `Linear` but restricted to circles.
    Radial { slope: f64 },
    /// `a = slope (1 + amplitude cos(2π mode y / |K|)) ρ + quadratic ρ²`.
    CosineModulated {
        slope: f64,
        amplitude: f64,
        mode: u32,
        #[serde(default)]
        quadratic: f64,
    },
    /// `a = Σ_ℓ coeffs[ℓ−1] ρ^ℓ`.
    Polynomial { coeffs: Vec<f64> },
    /// `a ≡ 0` (homogeneous Allen–Cahn; no interface is selected).
    Zero,
}

/// A field bound to the interface that defines its Fermi variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub spec: FieldSpec,
    pub interface: InterfaceSpec,
}

impl CoefficientField {
    pub fn new(spec: FieldSpec, interface: InterfaceSpec) -> Result<Self> {
        interface.validate()?;
        match (&spec, &interface) {
            (FieldSpec::Radial { .. }, InterfaceSpec::Point { .. } | InterfaceSpec::PeriodicLine { .. }) => {
                return Err(Error::InvalidInput("radial field requires a circle".into()));
            }
            (FieldSpec::CosineModulated { .. }, InterfaceSpec::Point { .. }) => {
                return Err(Error::InvalidInput(
                    "cosine modulation needs a one-dimensional interface".into(),
                ));
            }
            (FieldSpec::Polynomial { coeffs }, _) if coeffs.is_empty() => {
                return Err(Error::InvalidInput("polynomial field without coefficients".into()));
            }
            _ => {}
        }
        Ok(Self { spec, interface })
    }

    /// `a` at arc length `y` and raw distance `ρ`.
    pub fn eval_fermi(&self, y: f64, rho: f64) -> f64 {
        match &self.spec {
            FieldSpec::Linear { slope } | FieldSpec::Radial { slope } => slope * rho,
            FieldSpec::CosineModulated {
                slope,
                amplitude,
                mode,
                quadratic,
            } => slope * (1.0 + amplitude * self.phase(y, *mode).cos()) * rho + quadratic * rho * rho,
            FieldSpec::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| (acc + c) * rho),
            FieldSpec::Zero => 0.0,
        }
    }

    /// `(∂a/∂ρ, ∂a/∂y)` at `(y, ρ)`.
    pub fn grad_fermi(&self, y: f64, rho: f64) -> (f64, f64) {
        match &self.spec {
            FieldSpec::Linear { slope } | FieldSpec::Radial { slope } => (*slope, 0.0),
            FieldSpec::CosineModulated {
                slope,
                amplitude,
                mode,
                quadratic,
            } => {
                let ph = self.phase(y, *mode);
                let k = 2.0 * PI * *mode as f64 / self.interface.length();
                (
                    slope * (1.0 + amplitude * ph.cos()) + 2.0 * quadratic * rho,
                    -slope * amplitude * k * ph.sin() * rho,
                )
            }
            FieldSpec::Polynomial { coeffs } => {
                let d = coeffs
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (i, c)| acc * rho + (i + 1) as f64 * c);
                (d, 0.0)
            }
            FieldSpec::Zero => (0.0, 0.0),
        }
    }

    fn phase(&self, y: f64, mode: u32) -> f64 {
        2.0 * PI * mode as f64 * y / self.interface.length()
    }

    /// `a(x)` in Cartesian coordinates.
    pub fn eval(&self, x: Point) -> f64 {
        self.eval_fermi(self.interface.tangential(x), self.interface.raw_distance(x))
    }

    /// `∇a(x)` in Cartesian coordinates.
    pub fn gradient(&self, x: Point) -> Point {
        let (ar, ay) = self.grad_fermi(self.interface.tangential(x), self.interface.raw_distance(x));
        match self.interface {
            InterfaceSpec::Point { .. } => [ar, 0.0],
            InterfaceSpec::PeriodicLine { .. } => [ay, ar],
            InterfaceSpec::Circle { radius, center } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let r2 = dx * dx + dy * dy;
                let r = r2.sqrt();
                [ar * dx / r - ay * radius * dy / r2, ar * dy / r + ay * radius * dx / r2]
            }
        }
    }

    /// Orientation `σ` with `ζ = σρ`, chosen so that `∂a/∂ζ > 0` on `K`.
    pub fn orientation(&self) -> Result<f64> {
        let n = if matches!(self.interface, InterfaceSpec::Point { .. }) {
            1
        } else {
            64
        };
        let slopes: Vec<f64> = (0..n)
            .map(|j| self.grad_fermi(j as f64 * self.interface.length() / n as f64, 0.0).0)
            .collect();
        let min = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min > 0.0 {
            Ok(1.0)
        } else if max < 0.0 {
            Ok(-1.0)
        } else {
            Err(Error::NonPositiveWeight { min_b: min })
        }
    }
}

/// Tubular coordinates around `K` with tabulated curvature data.
#[derive(Debug, Clone)]
pub struct FermiChart {
    pub interface: InterfaceSpec,
    pub domain: DomainSpec,
    /// Orientation sign `σ`: `ζ = σρ`.
    pub sigma: f64,
    pub tube_halfwidth: f64,
    /// Interface nodes (arc length), uniform and periodic; a single node for
    /// points and axisymmetric circles.
    pub y: Vec<f64>,
    /// Mean curvature `κ(y)` with respect to `+ζ`.
    pub kappa: Vec<f64>,
    /// `G̃_ℓ(y)` for `ℓ = 1..=k_max`: Taylor coefficients of `∂_ζ log √det g`.
    pub expansion: Vec<Vec<f64>>,
}

impl FermiChart {
    /// Builds the chart; `tube` defaults to `min(½ dist(K, ∂Ω), ½ R₀)`.
    pub fn build(
        domain: DomainSpec,
        interface: InterfaceSpec,
        field: &CoefficientField,
        tube: Option<f64>,
        n_y: usize,
        k_max: usize,
    ) -> Result<Self> {
        domain.check_interface(&interface)?;
        if field.interface != interface {
            return Err(Error::InvalidInput("field and chart use different interfaces".into()));
        }
        let sigma = field.orientation()?;
        let dist = domain.boundary_distance(&interface);
        let fold = interface.radius().unwrap_or(f64::INFINITY);
        let halfwidth = tube.unwrap_or(0.5 * dist.min(fold));
        if !(halfwidth > 0.0) || halfwidth >= dist {
            return Err(Error::TubeTooWide { halfwidth, limit: dist });
        }
        if halfwidth >= fold {
            return Err(Error::TubeTooWide { halfwidth, limit: fold });
        }
        let n_y = if matches!(interface, InterfaceSpec::Point { .. }) {
            1
        } else {
            n_y.max(1)
        };
        let y: Vec<f64> = (0..n_y).map(|j| j as f64 * interface.length() / n_y as f64).collect();
        let dim = domain.dimension();
        let kappa0 = sigma * interface.raw_curvature(dim);
        let expansion = (1..=k_max.max(1))
            .map(|l| {
                let g = match interface.radius() {
                    Some(r) => (dim as f64 - 1.0) * sigma * (-sigma).powi(l as i32 - 1) / r.powi(l as i32),
                    None => 0.0,
                };
                vec![g; n_y]
            })
            .collect();
        Ok(Self {
            interface,
            domain,
            sigma,
            tube_halfwidth: halfwidth,
            y,
            kappa: vec![kappa0; n_y],
            expansion,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dimension()
    }

    pub fn n_y(&self) -> usize {
        self.y.len()
    }

    /// Oriented distance `ζ(x)`, positive where `a > 0`.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.sigma * self.interface.raw_distance(x)
    }

    pub fn tangential(&self, x: Point) -> f64 {
        self.interface.tangential(x)
    }

    /// `Γ(y, ζ)`.
    pub fn point(&self, y: f64, zeta: f64) -> Point {
        self.interface.point_at(y, self.sigma * zeta)
    }

    /// Exact `√det g(y, ζ)` relative to its value on `K`.
    pub fn volume_factor(&self, zeta: f64) -> f64 {
        match self.interface.radius() {
            Some(r) => ((r + self.sigma * zeta) / r).powi(self.dim() as i32 - 1),
            None => 1.0,
        }
    }

    /// `∂_ζ log √det g`: mean curvature of the parallel hypersurface at `ζ`.
    pub fn normal_log_derivative(&self, zeta: f64) -> f64 {
        match self.interface.radius() {
            Some(r) => (self.dim() as f64 - 1.0) * self.sigma / (r + self.sigma * zeta),
            None => 0.0,
        }
    }

    /// Factor multiplying `∂²_y` in the Laplacian at distance `ζ`.
    pub fn tangential_metric(&self, zeta: f64) -> f64 {
        match self.interface.radius() {
            Some(r) => (r / (r + self.sigma * zeta)).powi(2),
            None => 1.0,
        }
    }

    /// Largest `|ζ|` for which the chart is a diffeomorphism onto its image.
    pub fn chart_limit(&self) -> f64 {
        self.domain
            .boundary_distance(&self.interface)
            .min(self.interface.radius().unwrap_or(f64::INFINITY))
    }
}

/// Mean curvature of the interface at arc length `y`, oriented by `field`.
pub fn curvature(interface: &InterfaceSpec, field: &CoefficientField, dim: usize, _y: f64) -> Result<f64> {
    Ok(field.orientation()? * interface.raw_curvature(dim))
}

/// Oriented distance of `x` to `K`.
pub fn signed_distance(interface: &InterfaceSpec, field: &CoefficientField, x: Point) -> Result<f64> {
    Ok(field.orientation()? * interface.raw_distance(x))
}

/// Normal Taylor coefficients `b_ℓ(y) = (1/ℓ!) ∂^ℓ_ζ a(y, 0)`, `ℓ = 1..=ℓ_max`.
#[derive(Debug, Clone)]
pub struct NormalTaylor {
    pub coeffs: Vec<Vec<f64>>,
}

impl NormalTaylor {
    /// `b(y) = b₁(y)`.
    pub fn b(&self) -> &[f64] {
        &self.coeffs[0]
    }

    /// `b_ℓ` for `ℓ ≥ 1`.
    pub fn get(&self, l: usize) -> &[f64] {
        &self.coeffs[l - 1]
    }

    /// `Σ_{ℓ≤k} b_ℓ(y_j) ζ^ℓ`.
    pub fn truncated(&self, j: usize, k: usize, zeta: f64) -> f64 {
        (1..=k.min(self.coeffs.len()))
            .map(|l| self.coeffs[l - 1][j] * zeta.powi(l as i32))
            .sum()
    }
}

/// Eighth-order centered differences along the normal with step `tube/64`.
pub fn normal_taylor(field: &CoefficientField, chart: &FermiChart, l_max: usize) -> Result<NormalTaylor> {
    if !(1..=6).contains(&l_max) {
        return Err(Error::InvalidInput(format!(
            "normal Taylor order {l_max} outside 1..=6"
        )));
    }
    let h = chart.tube_halfwidth / 64.0;
    let mut coeffs = Vec::with_capacity(l_max);
    let mut factorial = 1.0;
    for l in 1..=l_max {
        factorial *= l as f64;
        let (offsets, w) = centered_weights(l, 8);
        let row: Vec<f64> = chart
            .y
            .iter()
            .map(|&y| {
                let d: f64 = offsets
                    .iter()
                    .zip(&w)
                    .map(|(&o, c)| c * field.eval_fermi(y, chart.sigma * o as f64 * h))
                    .sum();
                d / h.powi(l as i32) / factorial
            })
            .collect();
        coeffs.push(row);
    }
    let min_b = coeffs[0].iter().cloned().fold(f64::INFINITY, f64::min);
    if min_b <= 0.0 {
        return Err(Error::NonPositiveWeight { min_b });
    }
    Ok(NormalTaylor { coeffs })
}
