//! Flat TOML run manifests.
//!
//! ```toml
//! schema = 1
//! name = "N15"
//! modulus = 15
//! base = 7
//! phase_bits = 9
//! shots = 2048
//! seed = 2025
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use shorcert::cert::WindowMode;
use shorcert::circuit::Backend;
use shorcert::noise::NoiseSpec;
use shorcert::ExperimentConfig;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Text => "txt",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema: u32,
    pub name: Option<String>,
    pub modulus: u64,
    pub base: Option<u64>,
    pub phase_bits: Option<u32>,
    pub shots: Option<u64>,
    pub backend: Option<String>,
    pub noise: Option<String>,
    pub mode: Option<String>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub plot: Option<bool>,
    pub format: Option<ReportFormat>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let manifest: RunManifest =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        if manifest.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported manifest schema {} (this build reads schema {SCHEMA_VERSION})",
                manifest.schema
            )));
        }
        Ok(manifest)
    }

    /// The experiment this manifest describes, before command-line overrides.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::new(self.modulus);
        cfg.base = self.base;
        cfg.phase_bits = self.phase_bits;
        if let Some(shots) = self.shots {
            cfg.shots = shots;
        }
        if let Some(b) = &self.backend {
            cfg.backend = parse_field::<Backend>("backend", b)?;
        }
        if let Some(n) = &self.noise {
            cfg.noise = parse_field::<NoiseSpec>("noise", n)?;
        }
        if let Some(m) = &self.mode {
            cfg.mode = parse_field::<WindowMode>("mode", m)?;
        }
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn parse_field<T: FromStr<Err = shorcert::Error>>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|e| CliError::Config(format!("manifest key {key}: {e}")))
}
