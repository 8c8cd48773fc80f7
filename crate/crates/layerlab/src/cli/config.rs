//! Experiment configuration: TOML with an explicit schema version, validated
//! eagerly before any computation.

use crate::asymptotic::{AnsatzConfig, CurvatureSign};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, DomainSpec, FermiChart, FieldSpec, InterfaceSpec};
use crate::pde::{Discretization, FixedPointConfig, GridSpec, NewtonConfig};
use crate::spectrum::ScanOptions;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub geometry: GeometryBlock,
    pub field: FieldSpec,
    pub numerics: NumericsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weyl: Option<WeylBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub domain: DomainSpec,
    pub interface: InterfaceSpec,
    /// Tube half-width; defaults to half the distance to the boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tube: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    /// PDE grid; required by every command except `approx` and `weyl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Ansatz orders `k`.
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// The `ε` ladder.
    pub eps: Vec<f64>,
    /// Interface nodes used by the ansatz.
    #[serde(default = "default_chart_nodes")]
    pub chart_nodes: usize,
    #[serde(default = "default_signs")]
    pub curvature_signs: Vec<CurvatureSign>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveBlock {
    pub order: usize,
    pub fixed_point: bool,
    /// Distance from `K` beyond which `|u ∓ 1|` is measured.
    pub margin: f64,
    /// Write the full solution as CSV.
    pub write_solution: bool,
}

impl Default for SolveBlock {
    fn default() -> Self {
        Self {
            order: 2,
            fixed_point: true,
            margin: 0.25,
            write_solution: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumBlock {
    pub order: usize,
    /// Interface modes used for predictions.
    pub modes: usize,
    /// Interface nodes for predictions (the grid's `ny` when it has one).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    pub decompose: bool,
    /// Step of the centred ε-difference; no derivatives when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative_step: Option<f64>,
    pub derivative_modes: usize,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self {
            order: 2,
            modes: 64,
            nodes: None,
            decompose: true,
            derivative_step: None,
            derivative_modes: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylBlock {
    pub nodes: usize,
    pub modes: usize,
    /// Additional coefficient fields whose weights are fitted as well.
    pub extra_fields: Vec<FieldSpec>,
}

impl Default for WeylBlock {
    fn default() -> Self {
        Self {
            nodes: 256,
            modes: 64,
            extra_fields: Vec::new(),
        }
    }
}

fn default_orders() -> Vec<usize> {
    vec![2]
}
fn default_chart_nodes() -> usize {
    32
}
fn default_signs() -> Vec<CurvatureSign> {
    vec![CurvatureSign::Calibrated]
}
fn default_gamma() -> f64 {
    0.7
}

impl ExperimentConfig {
    /// Parses and validates a configuration.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical TOML of the validated configuration.
    pub fn snapshot(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn coefficient_field(&self) -> Result<CoefficientField> {
        CoefficientField::new(self.field.clone(), self.geometry.interface)
    }

    pub fn chart(&self, k: usize) -> Result<FermiChart> {
        let field = self.coefficient_field()?;
        FermiChart::build(
            self.geometry.domain,
            self.geometry.interface,
            &field,
            self.geometry.tube,
            self.numerics.chart_nodes,
            k + 1,
        )
    }

    pub fn ansatz_config(&self, order: usize, sign: CurvatureSign) -> AnsatzConfig {
        AnsatzConfig {
            curvature_sign: sign,
            gamma: self.numerics.gamma,
            ..AnsatzConfig::with_order(order)
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.numerics
            .grid
            .ok_or_else(|| Error::Config("numerics.grid is required for this command".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let n = &self.numerics;
        if n.eps.is_empty() {
            return Err(Error::Config("numerics.eps must not be empty".into()));
        }
        if let Some(e) = n.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Config(format!("ε = {e} outside (0, 1)")));
        }
        if n.orders.is_empty() || n.curvature_signs.is_empty() {
            return Err(Error::Config(
                "numerics.orders and numerics.curvature_signs must not be empty".into(),
            ));
        }
        let mut orders = n.orders.clone();
        orders.extend(self.solve.iter().map(|s| s.order));
        orders.extend(self.spectrum.iter().map(|s| s.order));
        for &k in &orders {
            self.ansatz_config(k, CurvatureSign::Calibrated).validate()?;
        }
        // Geometry, positivity of b and the tube are checked by building the chart.
        self.geometry.domain.validate()?;
        self.chart(*orders.iter().max().unwrap())?;
        if let Some(grid) = n.grid {
            Discretization::build(self.geometry.domain, grid)?;
        }
        if let Some(s) = &self.scan {
            s.validate()?;
        }
        if let Some(s) = &self.spectrum {
            if s.modes < 2 || s.nodes.is_some_and(|m| m < 4 * s.modes) {
                return Err(Error::Config(
                    "spectrum.nodes must be at least 4 · spectrum.modes".into(),
                ));
            }
            if let Some(d) = s.derivative_step {
                if let Some(e) = n.eps.iter().find(|e| !(d > 0.0 && d < 0.5 * **e)) {
                    return Err(Error::Config(format!(
                        "derivative step {d} outside (0, ε/2) for ε = {e}"
                    )));
                }
            }
        }
        if let Some(w) = &self.weyl {
            if w.modes < 6 || w.nodes < 4 * w.modes {
                return Err(Error::Config("weyl needs modes ≥ 6 and nodes ≥ 4 · modes".into()));
            }
            for f in &w.extra_fields {
                CoefficientField::new(f.clone(), self.geometry.interface)?.orientation()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const STRIP: &str = r#"
schema_version = 1

[geometry]
domain = { kind = "periodic_strip", period = 6.283185307179586, z_lo = -0.5, z_hi = 0.5 }
interface = { kind = "periodic_line", period = 6.283185307179586 }

[field]
builtin = "cosine_modulated"
slope = 1.0
amplitude = 0.3
mode = 1

[numerics]
grid = { kind = "strip", ny = 32, nz = 64 }
orders = [1, 2]
eps = [0.1, 0.05, 0.025]

[spectrum]
modes = 8
"#;

    #[test]
    fn snapshot_round_trip() {
        let cfg = ExperimentConfig::parse(STRIP).unwrap();
        let again = ExperimentConfig::parse(&cfg.snapshot().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.numerics.newton, NewtonConfig::default());
    }

    #[test]
    fn rejects_bad_configs() {
        let unknown = STRIP.replace("orders = [1, 2]", "orders = [1, 2]\nfoo = 1");
        assert!(matches!(ExperimentConfig::parse(&unknown), Err(Error::Config(_))));
        let empty = STRIP.replace("eps = [0.1, 0.05, 0.025]", "eps = []");
        assert!(ExperimentConfig::parse(&empty).is_err());
        let version = STRIP.replace("schema_version = 1", "schema_version = 7");
        assert!(ExperimentConfig::parse(&version).is_err());
        let negative_b = STRIP.replace("amplitude = 0.3", "amplitude = 1.5");
        assert!(matches!(
            ExperimentConfig::parse(&negative_b),
            Err(Error::NonPositiveWeight { .. })
        ));
        let wide = STRIP.replace("[field]", "tube = 0.6\n\n[field]");
        assert!(matches!(ExperimentConfig::parse(&wide), Err(Error::TubeTooWide { .. })));
        let grid = STRIP.replace(
            r#"{ kind = "strip", ny = 32, nz = 64 }"#,
            r#"{ kind = "interval", n = 64 }"#,
        );
        assert!(ExperimentConfig::parse(&grid).is_err());
        let order = STRIP.replace("orders = [1, 2]", "orders = [5]");
        assert!(ExperimentConfig::parse(&order).is_err());
    }
}
