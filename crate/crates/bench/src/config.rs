//! Protocol configuration file (TOML).

use std::path::{Path, PathBuf};

use eac_core::consensus::{Algorithm, ConsensusOptions};
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetSpec;
use crate::error::{BenchError, Result};

/// A dataset given inline or as a path to a spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetEntry {
    File { spec: PathBuf },
    Inline(DatasetSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "twenty")]
    pub repetitions: usize,
    #[serde(default = "twenty")]
    pub ensemble_size: usize,
    #[serde(default = "twenty")]
    pub k_out: usize,
    #[serde(default = "Algorithm::all")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub options: ConsensusOptions,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Concurrent (dataset, repetition) cells; `EAC_WORKERS` overrides it.
    #[serde(default = "one")]
    pub workers: usize,
    pub datasets: Vec<DatasetEntry>,
}

fn twenty() -> usize {
    20
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ProtocolConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| BenchError::Toml {
            path: origin.to_path_buf(),
            source,
        })
    }

    /// Reads a config file; relative paths inside it are taken from its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut cfg = Self::from_toml(&text, path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = dir.join(&cfg.output_dir);
        }
        for entry in cfg.datasets.iter_mut() {
            match entry {
                DatasetEntry::File { spec } if spec.is_relative() => *spec = dir.join(&*spec),
                DatasetEntry::Inline(s) if s.path.is_relative() => s.path = dir.join(&s.path),
                _ => {}
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(BenchError::Config("repetitions must be at least 1".into()));
        }
        if self.ensemble_size < 2 {
            return Err(BenchError::Config("ensemble_size must be at least 2".into()));
        }
        if self.k_out < 2 {
            return Err(BenchError::Config("k_out must be at least 2".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("no algorithms configured".into()));
        }
        if self.datasets.is_empty() {
            return Err(BenchError::Config("no datasets configured".into()));
        }
        let mut algs = self.algorithms.clone();
        algs.sort();
        if algs.windows(2).any(|w| w[0] == w[1]) {
            return Err(BenchError::Config("an algorithm is listed twice".into()));
        }
        Ok(())
    }

    pub fn dataset_specs(&self) -> Result<Vec<DatasetSpec>> {
        let specs = self
            .datasets
            .iter()
            .map(|e| match e {
                DatasetEntry::File { spec } => DatasetSpec::from_file(spec),
                DatasetEntry::Inline(s) => Ok(s.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(BenchError::Config("dataset names must be unique".into()));
        }
        Ok(specs)
    }

    /// Worker count after the `EAC_WORKERS` override.
    pub fn effective_workers(&self) -> usize {
        std::env::var("EAC_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(self.workers)
            .max(1)
    }
}
