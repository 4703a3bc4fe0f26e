use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::data::SynthSpec;
use crate::model::ModelSpec;
use crate::nn::TrainConfig;

/// Experiment manifest. Every section is optional; command-line flags
/// override whatever the file sets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub synth: SynthSpec,
    pub models: Vec<String>,
    pub output_dir: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("{origin}: invalid config: {e}")))?;
        cfg.validate().map_err(|e| CliError::Usage(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Checks everything that can be checked without data.
    pub fn validate(&self) -> Result<(), String> {
        self.train.validate().map_err(|e| e.to_string())?;
        self.synth.validate().map_err(|e| e.to_string())?;
        for m in &self.models {
            ModelSpec::parse_name(m, 2).map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}
