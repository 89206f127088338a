//! TOML run configuration. Every section is optional; missing keys take
//! their defaults and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::BenchProtocol;
use crate::cluster::DbscanParams;
use crate::driver::DriverConfig;
use crate::error::{Error, Result};
use crate::legalize::LegalizeConfig;
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
    pub driver: DriverConfig,
    pub legalize: LegalizeConfig,
    pub bench: BenchProtocol,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.driver.validate()?;
        if let Some(p) = self.driver.dbscan {
            DbscanParams::new(p.epsilon, p.minpts)?;
        }
        self.legalize.validate()?;
        self.bench.validate()
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            driver: self.driver,
            legalize: self.legalize,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
