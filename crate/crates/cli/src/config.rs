//! Run configuration: one TOML file with `[system]`, `[sampling]`, `[model]`,
//! `[training]` and `[io]` sections. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use symrom::rom::{ModelConfig, TrainConfig};
use symrom::systems::{Sampling, SystemSpec};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub sampling: Sampling,
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub io: IoConfig,
}

/// Default artifact locations, relative to the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("dataset.bin"),
            out_dir: PathBuf::from("run"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system.validate()?;
        self.sampling.validate(&self.system)?;
        self.model.validate(self.system.grid_points())?;
        self.training.validate()?;
        let steps = self.sampling.n_steps(self.system.dt());
        if self.training.unroll > steps {
            return Err(CliError::Validation(format!(
                "unroll {} exceeds the {steps} steps per trajectory",
                self.training.unroll
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DESK: &str = r#"
[system]
kind = "wave"
grid_points = 16
dt = 0.24
omega2 = 0.01

[sampling]
horizon = 2.4
seed = 3
count = 4

[model]
latent_dim = 2
henon_layers = 1
henon_hidden = [8]
reflectors = 2
flow_layers = 1
flow_hidden = [4]

[training]
epochs = 2
"#;

    #[test]
    fn test_round_trip() {
        let cfg = RunConfig::parse(DESK).unwrap();
        assert_eq!(cfg.training.epochs, 2);
        assert_eq!(cfg.training.lambda2, TrainConfig::default().lambda2);
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn test_unknown_key_rejected() {
        let text = DESK.replace("epochs = 2", "epochs = 2\nepoch = 3");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Validation(_))));
        let text = DESK.replace("omega2 = 0.01", "omega2 = 0.01\nomega = 1.0");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn test_unroll_longer_than_trajectory_rejected() {
        let text = DESK.replace("epochs = 2", "epochs = 2\nunroll = 11");
        assert!(RunConfig::parse(&text).is_err());
    }
}
