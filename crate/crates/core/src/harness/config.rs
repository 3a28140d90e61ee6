use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::click_models::{generate_instance, BanditInstance, ModelKind, Scenario};
use crate::error::{Error, Result};
use crate::evaluation::SafetyRule;
use crate::rankers::RankerId;

/// Where the bandit instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    File {
        path: PathBuf,
    },
    Generated {
        scenario: Scenario,
        model: ModelKind,
        #[serde(rename = "L")]
        num_items: usize,
        #[serde(rename = "K")]
        display_size: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl InstanceSource {
    pub fn load(&self) -> Result<BanditInstance> {
        match self {
            InstanceSource::File { path } => BanditInstance::load(path),
            InstanceSource::Generated {
                scenario,
                model,
                num_items,
                display_size,
                seed,
            } => generate_instance(*scenario, *model, *num_items, *display_size, *seed)
                .map_err(|e| Error::config("instance", e.to_string())),
        }
    }
}

fn default_horizon() -> u64 {
    100_000
}

fn default_runs() -> usize {
    100
}

fn default_algorithms() -> Vec<String> {
    RankerId::ALL
        .iter()
        .map(|id| id.as_str().to_string())
        .collect()
}

fn default_stride() -> u64 {
    100
}

/// Experiment description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    /// Confidence level; `None` means `1/T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_stride")]
    pub checkpoint_stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub safety_threshold: SafetyRule,
    /// Worker threads; `None` uses all cores, 1 runs sequentially.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSource) -> Self {
        ExperimentConfig {
            instance,
            horizon: default_horizon(),
            runs: default_runs(),
            algorithms: default_algorithms(),
            delta: None,
            master_seed: 0,
            checkpoint_stride: default_stride(),
            output_dir: None,
            safety_threshold: SafetyRule::default(),
            threads: None,
        }
    }

    /// Reads a config file. Relative instance paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
        if let InstanceSource::File { path: p } = &mut config.instance {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// `delta`, or `1/T` when unset (0.5 for a single-round horizon).
    pub fn effective_delta(&self) -> f64 {
        self.delta.unwrap_or(if self.horizon >= 2 {
            1.0 / self.horizon as f64
        } else {
            0.5
        })
    }

    pub fn ranker_ids(&self) -> Result<Vec<RankerId>> {
        if self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithms",
                "at least one algorithm is required",
            ));
        }
        let mut ids = Vec::with_capacity(self.algorithms.len());
        for name in &self.algorithms {
            let id: RankerId = name.parse()?;
            if ids.contains(&id) {
                return Err(Error::config(
                    "algorithms",
                    format!("`{name}` listed twice"),
                ));
            }
            ids.push(id);
        }
        Ok(ids)
    }

    /// Checks every field and loads the instance.
    pub fn validate(&self) -> Result<ValidatedConfig> {
        if self.horizon == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        if self.checkpoint_stride == 0 {
            return Err(Error::config("checkpoint_stride", "must be at least 1"));
        }
        let delta = self.effective_delta();
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config("delta", format!("{delta} is not in (0,1)")));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        let algorithms = self.ranker_ids()?;
        let instance = self.instance.load().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config("instance", other.to_string()),
        })?;
        Ok(ValidatedConfig {
            instance,
            algorithms,
            horizon: self.horizon,
            runs: self.runs,
            delta,
            master_seed: self.master_seed,
            checkpoint_stride: self.checkpoint_stride,
            safety_rule: self.safety_threshold,
            threads: self.threads,
        })
    }
}

/// A config whose fields have been checked and whose instance is loaded.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub instance: BanditInstance,
    pub algorithms: Vec<RankerId>,
    pub horizon: u64,
    pub runs: usize,
    pub delta: f64,
    pub master_seed: u64,
    pub checkpoint_stride: u64,
    pub safety_rule: SafetyRule,
    pub threads: Option<usize>,
}
