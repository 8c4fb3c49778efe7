//! JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::CdElement;
use crate::error::{Error, Result};
use crate::flows::{FlowKind, FlowSpec, MiuraForm, Stepper};
use crate::grid::Grid;
use crate::initial::InitialCondition;
use crate::symmetry::SymmetrySpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub kind: FlowKind,
    #[serde(default)]
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub stepper: Stepper,
    #[serde(default)]
    pub miura_form: MiuraForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

fn default_directory() -> String {
    "out".to_string()
}

fn default_charge_count() -> usize {
    6
}

fn default_series_terms() -> usize {
    7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    /// Snapshot every this many steps; 0 writes the initial and final states only.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Number of Gardner charges `Q_0..` tracked at snapshot times.
    #[serde(default = "default_charge_count")]
    pub charge_count: usize,
    /// Terms written by the `series` subcommand.
    #[serde(default = "default_series_terms")]
    pub series_terms: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            snapshot_every: 0,
            charge_count: default_charge_count(),
            series_terms: default_series_terms(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub algebra_relative: f64,
    pub first_structure: f64,
    pub scalar_oracle: f64,
    pub skew: f64,
    pub flow_commutation: f64,
    pub equivariance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebra_relative: 1e-12,
            first_structure: 1e-8,
            scalar_oracle: 1e-8,
            skew: 1e-10,
            flow_commutation: 1e-6,
            equivariance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub flow: FlowConfig,
    pub grid: GridConfig,
    pub initial_condition: InitialCondition,
    #[serde(default)]
    pub v: [f64; 8],
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetries: Vec<SymmetrySpec>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        // a meta.json written by a run embeds its config
        let value = match value.get("config") {
            Some(inner) if value.get("schema").is_some() => inner.clone(),
            _ => value,
        };
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.flow_spec_on(&grid)?.validate().map_err(|e| Error::Config(format!("flow: {e}")))?;
        if self.v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("v: must be finite".into()));
        }
        if self.outputs.charge_count == 0 || self.outputs.series_terms == 0 {
            return Err(Error::Config("outputs: charge_count and series_terms must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.epsilons.is_empty() || s.epsilons.iter().any(|e| !e.is_finite()) {
                return Err(Error::Config("sweep.epsilons: must be a nonempty list of finite values".into()));
            }
        }
        self.initial_condition.validate(&grid)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.length).map_err(|e| Error::Config(format!("grid: {e}")))
    }

    fn flow_spec_on(&self, grid: &Grid) -> Result<FlowSpec> {
        Ok(FlowSpec::new(self.flow.kind, grid, self.flow.dt, self.flow.t_end)
            .with_epsilon(self.flow.epsilon)
            .with_v(CdElement::octonion(self.v))
            .with_stepper(self.flow.stepper)
            .with_miura_form(self.flow.miura_form)
            .with_snapshot_every(self.outputs.snapshot_every))
    }

    pub fn flow_spec(&self) -> Result<FlowSpec> {
        self.flow_spec_on(&self.grid()?)
    }
}
