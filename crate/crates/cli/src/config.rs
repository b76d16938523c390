//! Experiment configuration: a JSON or TOML file describing the data source,
//! segmentation, model, optimizer, and CV protocol, plus the command-line
//! overrides layered on top.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use adindrnn_core::data::SyntheticConfig;
use adindrnn_core::model::ModelSpec;
use adindrnn_core::training::TrainConfig;

/// Environment variable that overrides the EDF dataset directory.
pub const DATA_ROOT_ENV: &str = "ADINDRNN_DATA_ROOT";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataConfig {
    /// A directory of `*.edf` files plus an annotation file.
    Edf {
        data_root: PathBuf,
        annotations: PathBuf,
        /// Record file names to skip (deviant montages and the like).
        #[serde(default)]
        exclude: Vec<String>,
    },
    /// Generated oscillation corpus; runs the identical pipeline.
    Synthetic {
        #[serde(flatten)]
        synthetic: SyntheticConfig,
    },
    /// Previously written segment cache directory.
    Cache { dir: PathBuf },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOverride {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub lengths: Vec<f64>,
    /// Model used for the sweep; defaults to a 12-layer plain IndRNN stack.
    pub model: Option<ModelSpec>,
    /// Per-length learning-rate/epoch overrides, keyed by the length in
    /// seconds as written in `lengths`.
    pub overrides: BTreeMap<String, SweepOverride>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lengths: vec![
                23.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0,
            ],
            model: None,
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    #[serde(default = "default_seg_len")]
    pub seg_len_s: f64,
    /// Channel labels in model order; empty means "intersection of labels
    /// across loaded records, in first-file order".
    #[serde(default)]
    pub channels: Vec<String>,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Temporal decimation factor applied to segments before the model;
    /// 1 keeps every sample.
    #[serde(default = "default_decimate")]
    pub decimate: usize,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_seg_len() -> f64 {
    23.0
}
fn default_rounds() -> usize {
    10
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_decimate() -> usize {
    1
}

/// Command-line overrides shared by every config-driven subcommand.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Experiment seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Segment length in seconds.
    #[arg(long)]
    pub seg_len: Option<f64>,
    /// Number of CV rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Temporal decimation factor.
    #[arg(long)]
    pub decimate: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: ExperimentConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).context("parsing TOML config")?,
            _ => serde_json::from_str(&text).context("parsing JSON config")?,
        };

        if let Ok(root) = std::env::var(DATA_ROOT_ENV) {
            if let DataConfig::Edf { data_root, .. } = &mut config.data {
                *data_root = PathBuf::from(root);
            }
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(out) = &overrides.out {
            config.out_dir = out.clone();
        }
        if let Some(seg_len) = overrides.seg_len {
            config.seg_len_s = seg_len;
        }
        if let Some(rounds) = overrides.rounds {
            config.rounds = rounds;
        }
        if let Some(decimate) = overrides.decimate {
            config.decimate = decimate;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            bail!("rounds must be at least 1");
        }
        if self.seg_len_s <= 0.0 {
            bail!("seg_len_s must be positive");
        }
        if self.decimate == 0 {
            bail!("decimate must be at least 1");
        }
        self.model
            .validate()
            .map_err(|e| anyhow::anyhow!("model: {e}"))?;
        self.train
            .validate()
            .map_err(|e| anyhow::anyhow!("train: {e}"))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSON: &str = r#"{
        "data": {"kind": "synthetic"},
        "model": {
            "variant": "adindrnn",
            "n_channels": 3,
            "blocks": [{"layers": 2, "state_size": 8}, {"layers": 2, "state_size": 12}]
        },
        "seg_len_s": 1.0,
        "rounds": 2,
        "seed": 7
    }"#;

    #[test]
    fn json_config_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        std::fs::write(&path, JSON).unwrap();
        let config = ExperimentConfig::load(&path, &Overrides::default()).unwrap();
        assert_eq!(config.rounds, 2);
        assert_eq!(config.seg_len_s, 1.0);
        assert_eq!(config.train.learning_rate, 0.0004);
        assert_eq!(config.decimate, 1);
        assert_eq!(config.precision, Precision::F64);
        assert!(matches!(config.data, DataConfig::Synthetic { .. }));
    }

    #[test]
    fn toml_config_and_overrides() {
        let toml_text = r#"
            seg_len_s = 1.0
            rounds = 3

            [data]
            kind = "synthetic"
            n_records = 4

            [model]
            variant = "indrnn"
            n_channels = 3
            blocks = [{ layers = 1, state_size = 4 }]

            [train]
            epochs = 2
        "#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, toml_text).unwrap();
        let overrides = Overrides {
            seed: Some(99),
            rounds: Some(1),
            ..Overrides::default()
        };
        let config = ExperimentConfig::load(&path, &overrides).unwrap();
        assert_eq!(config.seed, 99);
        assert_eq!(config.rounds, 1);
        assert_eq!(config.train.epochs, 2);
        match &config.data {
            DataConfig::Synthetic { synthetic } => assert_eq!(synthetic.n_records, 4),
            other => panic!("unexpected data config {other:?}"),
        }
    }

    #[test]
    fn env_var_overrides_edf_data_root() {
        let json = r#"{
            "data": {"kind": "edf", "data_root": "/original", "annotations": "/ann.csv"},
            "model": {"variant": "indrnn", "n_channels": 2, "blocks": [{"layers": 1, "state_size": 2}]}
        }"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        std::fs::write(&path, json).unwrap();
        std::env::set_var(DATA_ROOT_ENV, "/replaced");
        let config = ExperimentConfig::load(&path, &Overrides::default()).unwrap();
        std::env::remove_var(DATA_ROOT_ENV);
        match &config.data {
            DataConfig::Edf { data_root, .. } => {
                assert_eq!(data_root, &PathBuf::from("/replaced"))
            }
            other => panic!("unexpected data config {other:?}"),
        }
    }

    #[test]
    fn default_sweep_covers_the_thirteen_lengths() {
        let sweep = SweepConfig::default();
        assert_eq!(sweep.lengths.len(), 13);
        assert_eq!(sweep.lengths[0], 23.0);
        assert_eq!(*sweep.lengths.last().unwrap(), 110.0);
    }
}
