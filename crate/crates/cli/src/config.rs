use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rmpnav::geometry::WorldGenParams;
use rmpnav::policies::{ParamOverrides, PolicyParams, Preset};
use rmpnav::sim::{BatchSpec, Planner, RolloutConfig};
use serde::{Deserialize, Serialize};

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

/// Batch experiment description. Every random choice is derived from
/// `seeds`, so a saved config reruns to the same table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_preset")]
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub tiers: Vec<usize>,
    pub planners: Vec<Planner>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Include the planning-time column in the batch table.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default, skip_serializing_if = "ParamOverrides::is_empty")]
    pub overrides: ParamOverrides,
    #[serde(default)]
    pub rollout: RolloutConfig,
    #[serde(default)]
    pub world: WorldGenParams,
}

fn default_preset() -> Preset {
    Preset::StaticMap
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<PolicyParams> {
        Ok(self.overrides.apply(self.preset.params())?)
    }

    pub fn batch_spec(&self) -> Result<BatchSpec> {
        let rollout = RolloutConfig {
            params: self.params()?,
            ..self.rollout.clone()
        };
        let spec = BatchSpec {
            seeds: self.seeds.clone(),
            tiers: self.tiers.clone(),
            planners: self.planners.clone(),
            rollout,
            world: self.world.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).with_context(|| format!("cannot parse {}", origin.display()))?;
        if cfg.version != EXPERIMENT_SCHEMA_VERSION {
            bail!(
                "{}: experiment config version {} is not supported (expected {EXPERIMENT_SCHEMA_VERSION})",
                origin.display(),
                cfg.version
            );
        }
        cfg.batch_spec().with_context(|| format!("invalid experiment in {}", origin.display()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}
