//! Run configuration read from a JSON document. Every section has defaults,
//! so `{}` is a valid configuration; the filled-in form is what gets echoed
//! into output artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use csh_core::mountainpass::{CutoffChoice, SolverConfig};
use csh_core::{PhysicalParams, RadialGrid};
use serde::{Deserialize, Serialize};

/// Screening mass below which the Dirichlet condition at `R = 20` stops
/// being a good model of decay at infinity.
const WEAK_SCREENING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_params")]
    pub params: PhysicalParams,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub cutoff: CutoffChoice,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn default_params() -> PhysicalParams {
    PhysicalParams {
        m: 1.0,
        omega: 1.0,
        e: 0.05,
        kappa: 1.0,
        q: 1.0,
    }
}

fn default_seed() -> u64 {
    42
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: default_params(),
            grid: GridConfig::default(),
            cutoff: CutoffChoice::default(),
            solver: SolverConfig::default(),
            seed: default_seed(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { radius: 20.0, n: 2048 }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("./out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let config: Self = serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.params.validate()?;
        self.build_grid()?;
        self.solver.validate()?;
        if let CutoffChoice::Fixed(t) = self.cutoff {
            csh_core::functional::CutoffSpec::new(t)?;
        }
        if self.output.formats.is_empty() {
            bail!("output.formats must name at least one of json, csv");
        }
        Ok(())
    }

    pub fn build_grid(&self) -> anyhow::Result<Arc<RadialGrid>> {
        Ok(RadialGrid::shared(self.grid.radius, self.grid.n)?)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }

    /// Advisory messages about parameter choices the model handles poorly.
    pub fn warnings(&self) -> Vec<String> {
        let mu = self.params.screening();
        if mu < WEAK_SCREENING {
            vec![format!(
                "warning: screening kappa*q = {mu} is below {WEAK_SCREENING}; the neutral field decays slowly, consider enlarging R"
            )]
        } else {
            Vec::new()
        }
    }
}
