//! Scenario configuration. Every field has a default, so `{}` is a complete
//! configuration describing the reference Manhattan-grid study.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::association::RadioParams;
use crate::error::{Error, Result};
use crate::relay_math::CapacityLaw;
use crate::scheduler::RelayParams;
use crate::topology::GridSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    pub radio: RadioParams,
    pub relay: RelayParams,
    pub drops: usize,
    pub slots: usize,
    pub seed: u64,
    /// Optional ceiling on spectral efficiency, bit/s/Hz.
    pub capacity_cap: Option<f64>,
    /// Set to false to evaluate every link interference-free.
    pub interference: bool,
    pub out_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid: GridSpec::default(),
            radio: RadioParams::default(),
            relay: RelayParams::default(),
            drops: 20,
            slots: 200,
            seed: 1,
            capacity_cap: None,
            interference: true,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.radio.validate()?;
        self.relay.validate()?;
        if self.drops == 0 {
            return Err(Error::config("drops", "must be >= 1"));
        }
        if self.slots == 0 {
            return Err(Error::config("slots", "must be >= 1"));
        }
        CapacityLaw::new(self.capacity_cap)
            .map_err(|e| Error::config("capacity_cap", e.to_string()))?;
        Ok(())
    }

    pub fn capacity_law(&self) -> CapacityLaw {
        CapacityLaw::new(self.capacity_cap).unwrap_or(CapacityLaw::SHANNON)
    }

    /// Parses and validates a JSON configuration.
    pub fn from_json(text: &str) -> Result<ScenarioConfig> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::from_json(&std::fs::read_to_string(path)?)
}
