use std::path::Path;

use anyhow::Context as _;
use gripstiff::pipeline::PipelineConfig;
use gripstiff::visco::{HcOptions, EPS_MIN};
use serde::{Deserialize, Serialize};

use crate::usage;

/// Contents of the `--config` file. Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub hunt_crossley: HcOptions,
    /// Strain below which Kelvin-Voigt fits ignore samples.
    pub kv_eps_min: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            hunt_crossley: HcOptions::default(),
            kv_eps_min: EPS_MIN,
        }
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        if !path.exists() {
            return Err(usage(format!("config file {} not found", path.display())));
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }
}
