//! Run configuration: TOML loading, defaulting, and validation.
//!
//! Unknown keys are hard errors so typos never silently fall back to
//! defaults; every section validates its own invariants, and endpoint
//! references are checked at load time.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::advantage::AdvantageConfig;
use crate::eval::EvalConfig;
use crate::gateway::{EndpointConfig, SamplingParams};
use crate::reward::RewardMode;
use crate::sim::SimConfig;
use crate::synth::SynthConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { input_dir: PathBuf::from("data"), output_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub endpoints: Vec<EndpointConfig>,
    pub sampling: SamplingParams,
    pub advantage: AdvantageConfig,
    pub eval: EvalConfig,
    pub synth: SynthConfig,
    pub sim: SimConfig,
    pub reward_mode: RewardMode,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            endpoints: Vec::new(),
            sampling: SamplingParams::default(),
            advantage: AdvantageConfig::default(),
            eval: EvalConfig::default(),
            synth: SynthConfig::default(),
            sim: SimConfig::default(),
            reward_mode: RewardMode::S2j,
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for e in &self.endpoints {
            e.validate()?;
        }
        for (i, e) in self.endpoints.iter().enumerate() {
            if self.endpoints[..i].iter().any(|other| other.name == e.name) {
                return Err(Error::Config(format!("duplicate endpoint name {:?}", e.name)));
            }
        }
        self.sampling.validate()?;
        self.advantage.validate()?;
        self.eval.validate()?;
        self.synth.validate()?;
        self.sim.validate()?;
        Ok(())
    }

    /// Resolves an endpoint by name; a dangling reference is a config error
    /// naming both the reference and the available endpoints.
    pub fn endpoint(&self, name: &str) -> Result<&EndpointConfig> {
        self.endpoints.iter().find(|e| e.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.endpoints.iter().map(|e| e.name.as_str()).collect();
            Error::Config(format!(
                "endpoint {name:?} is not defined (known endpoints: {known:?})"
            ))
        })
    }
}

/// Loads, defaults, and validates a TOML run configuration.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| {
        Error::Config(format!("{}: {e}", path.display()))
    })?;
    config.validate()?;
    Ok(config)
}
