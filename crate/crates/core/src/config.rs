//! TOML run configuration.
//!
//! ```toml
//! [model]
//! kind = "linear"
//! a = 2.0
//! b = 1.0
//! gdiag = 1.0
//! k1 = 8.0
//! k2 = 3.0
//!
//! [sim]
//! N = 20000
//! dt = 0.001
//! delta = 0.01
//! T = 3.0
//! seed = 42
//! x0 = [1.0]
//! record_stride = 10          # optional, default 1
//! snapshot_times = [0.0, 1.0] # optional
//! moment_order = 2            # optional: adds mp,hold_err columns
//!
//! [constants]                 # optional; needed by `conditions`
//! L1 = 8.0
//! L2 = 1.0
//! L3 = 128.0
//! lambda1 = 0.5
//! lambda2 = 0.5
//! decay_coeff = 3.5           # effective gamma1 * c1
//! gamma2 = 0.0                # optional, default 0
//! c1 = 1.0
//! c2 = 2.0
//! p = 2
//!
//! [output]                    # optional
//! directory = "out"
//! prefix = "run"
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LinearMeanFieldParams;
use crate::sim::SimConfig;
use crate::stability::ConditionConstants;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Linear(LinearMeanFieldParams),
}

impl ModelConfig {
    pub fn linear_params(&self) -> LinearMeanFieldParams {
        match self {
            ModelConfig::Linear(p) => *p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "L3")]
    pub l3: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Effective `γ₁c₁`.
    pub decay_coeff: f64,
    #[serde(default)]
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub p: u32,
}

impl ConstantsConfig {
    pub fn resolve(&self) -> Result<ConditionConstants> {
        ConditionConstants::from_decay_coeff(
            self.l1,
            self.l2,
            self.l3,
            self.lambda1,
            self.lambda2,
            self.decay_coeff,
            self.gamma2,
            self.c1,
            self.c2,
            self.p as f64,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_directory() -> PathBuf {
    PathBuf::from(".")
}

fn default_prefix() -> String {
    "run".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            prefix: default_prefix(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses and validates; errors carry the line or the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)
            .map_err(|e| Error::ConfigSyntax(e.to_string().trim_end().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.linear_params().validate()?;
        self.sim.grid()?;
        if self.sim.x0.len() != 1 {
            return Err(Error::config(
                "sim.x0",
                "the linear model is one-dimensional",
            ));
        }
        if let Some(c) = &self.constants {
            c.resolve()?;
        }
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err(Error::config(
                "output.prefix",
                "must be a non-empty file name stem",
            ));
        }
        Ok(())
    }

    /// Condition constants, required by some subcommands only.
    pub fn constants(&self) -> Result<ConditionConstants> {
        self.constants
            .as_ref()
            .ok_or_else(|| Error::config("constants", "section required for this subcommand"))?
            .resolve()
    }

    /// Everything that determines the outputs, as TOML. The output directory
    /// is left out: it places files but never changes their contents.
    pub fn manifest(&self) -> String {
        #[derive(Serialize)]
        struct Manifest<'a> {
            version: &'a str,
            seed: u64,
            model: &'a ModelConfig,
            sim: &'a SimConfig,
            #[serde(skip_serializing_if = "Option::is_none")]
            constants: &'a Option<ConstantsConfig>,
            prefix: &'a str,
        }
        toml::to_string(&Manifest {
            version: env!("CARGO_PKG_VERSION"),
            seed: self.sim.seed,
            model: &self.model,
            sim: &self.sim,
            constants: &self.constants,
            prefix: &self.output.prefix,
        })
        .expect("run config serializes")
    }
}
