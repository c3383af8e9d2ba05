//! Experiment manifests, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::{Domain, GraphKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Gss,
    Random,
    RowNorm,
    Full,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::Gss => "gss",
            Sampler::Random => "random",
            Sampler::RowNorm => "rownorm",
            Sampler::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(flatten)]
    pub kind: GraphKind,
    pub seed: u64,
}

fn default_k() -> usize {
    50
}

fn default_n_max() -> usize {
    10_000
}

fn default_random_sets() -> usize {
    50
}

fn default_samplers() -> Vec<Sampler> {
    vec![Sampler::Gss, Sampler::Random, Sampler::RowNorm, Sampler::Full]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Everything needed to reproduce a benchmark or bandwidth sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub graph: GraphSpec,
    /// 1-based frequency indices. For a bandwidth sweep this is the first
    /// band; each bandwidth `B` uses `B` consecutive indices from its start.
    pub passband: Vec<usize>,
    pub domain: Domain,
    pub budgets: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Samplers to run; `full` is the all-samples reference.
    #[serde(default = "default_samplers")]
    pub baselines: Vec<Sampler>,
    /// Random sampling sets averaged per trial and budget.
    #[serde(default = "default_random_sets")]
    pub random_sets: usize,
    /// Bandwidths for the sweep; empty for a plain benchmark.
    #[serde(default)]
    pub bandwidths: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Check the parts that do not need the graph. Budget bounds against
    /// the domain size are checked by [`ExperimentManifest::validate_for`].
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Manifest(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.k == 0 || self.n_max == 0 {
            return bad("k and n_max must be at least 1");
        }
        if self.passband.is_empty() {
            return bad("passband must not be empty");
        }
        if self.budgets.is_empty() {
            return bad("budgets must not be empty");
        }
        if self.baselines.contains(&Sampler::Random) && self.random_sets == 0 {
            return bad("random_sets must be at least 1");
        }
        Ok(())
    }

    /// Check every budget against bandwidth `b` and the domain size.
    pub fn validate_for(&self, b: usize, domain_size: usize) -> Result<()> {
        self.validate()?;
        for &m in &self.budgets {
            if m <= b || m > domain_size {
                return Err(Error::Manifest(format!("budget {m} outside ({b}, {domain_size}]")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Passband of `b` consecutive indices starting at the manifest's first.
    pub fn passband_of_width(&self, b: usize) -> Vec<usize> {
        (self.passband[0]..self.passband[0] + b).collect()
    }
}
