use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ReferenceProfile;
use crate::error::{Error, Result};
use crate::experiment::StepExperimentConfig;
use crate::pipeline::{NetworkConfig, TrainerConfig};
use crate::plant::MotorParams;

/// Closed-loop evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub profile: ReferenceProfile,
    /// Closed-loop noise seeds; in the full study each one also offsets the
    /// experiment seed of its LM/BR pair.
    pub seeds: Vec<u64>,
    /// Largest mean absolute error the analytic-inverse self-test accepts.
    pub oracle_tolerance: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            profile: ReferenceProfile::default(),
            seeds: (0..10).collect(),
            oracle_tolerance: 0.01,
        }
    }
}

/// Everything a workbench command needs. Every field has a default, and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub plant: MotorParams,
    pub experiment: StepExperimentConfig,
    pub network: NetworkConfig,
    pub trainer: TrainerConfig,
    pub evaluation: EvaluationConfig,
    pub output_dir: PathBuf,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        Self {
            plant: MotorParams::default(),
            experiment: StepExperimentConfig::default(),
            network: NetworkConfig::default(),
            trainer: TrainerConfig::default(),
            evaluation: EvaluationConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl WorkbenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.experiment.validate()?;
        self.network.validate()?;
        self.trainer.validate()?;
        self.evaluation.profile.validate()?;
        if self.evaluation.seeds.is_empty() {
            return Err(Error::InvalidConfig("evaluation.seeds is empty".into()));
        }
        if !(self.evaluation.oracle_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "evaluation.oracle_tolerance must be positive, got {}",
                self.evaluation.oracle_tolerance
            )));
        }
        Ok(())
    }
}
