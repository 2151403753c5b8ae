//! Experiment configuration: a TOML file with one table per section plus
//! `section.key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use isac_core::channel::SystemConfig;
use isac_core::cnn::{TrainConfig, DEFAULT_HIDDEN};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ISAC_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    /// The reference layout with everything at rest.
    Static,
    /// The reference layout with a uniformly drawn UE range and velocity per packet.
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub kind: SceneKind,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self { kind: SceneKind::Dynamic }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub snr_list_db: Vec<f64>,
    pub samples_per_snr: usize,
    pub train_fraction: f64,
    pub eval_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            snr_list_db: vec![5.0, 10.0, 15.0],
            samples_per_snr: 200,
            train_fraction: 0.75,
            eval_fraction: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden1: usize,
    pub hidden2: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden1: DEFAULT_HIDDEN,
            hidden2: DEFAULT_HIDDEN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    /// Biased-FFT step counts `N_r` to sweep; each must be even.
    pub bias_steps: Vec<usize>,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            bias_steps: vec![10, 50, 200],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerConfig {
    pub snr_list_db: Vec<f64>,
    pub packets_per_snr: usize,
    pub constellations: Vec<usize>,
}

impl Default for BerConfig {
    fn default() -> Self {
        Self {
            snr_list_db: vec![0.0, 5.0, 10.0, 15.0],
            packets_per_snr: 60,
            constellations: vec![4, 16],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root of every random stream. Required.
    pub seed: u64,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "desk_train")]
    pub train: TrainConfig,
    #[serde(default)]
    pub sensing: SensingConfig,
    #[serde(default)]
    pub ber: BerConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn desk_train() -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        ..TrainConfig::default()
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults with the given seed.
    pub fn desk(seed: u64) -> Self {
        Self {
            seed,
            system: SystemConfig::desk(),
            scene: SceneConfig::default(),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: desk_train(),
            sensing: SensingConfig::default(),
            ber: BerConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).context("parsing config")?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table).try_into().context("reading config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Training settings with the shuffling stream tied to the run seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let d = &self.data;
        if d.snr_list_db.is_empty() || d.samples_per_snr == 0 {
            bail!("data.snr_list_db and data.samples_per_snr must be non-empty");
        }
        if !(d.train_fraction >= 0.0 && d.eval_fraction >= 0.0) || (d.train_fraction + d.eval_fraction - 1.0).abs() > 1e-9 {
            bail!(
                "data.train_fraction + data.eval_fraction must be 1, got {} + {}",
                d.train_fraction,
                d.eval_fraction
            );
        }
        if self.model.hidden1 == 0 || self.model.hidden2 == 0 {
            bail!("model hidden channel counts must be positive");
        }
        if self.train.batch_size == 0 || !(self.train.learning_rate >= 0.0) {
            bail!("train.batch_size must be positive and train.learning_rate non-negative");
        }
        if let Some(&n) = self.sensing.bias_steps.iter().find(|&&n| n < 2 || n % 2 != 0) {
            bail!("sensing.bias_steps must be even and at least 2, got {n}");
        }
        if let Some(&m) = self.ber.constellations.iter().find(|&&m| m != 4 && m != 16) {
            bail!("ber.constellations supports 4 and 16, got {m}");
        }
        Ok(())
    }

    /// `--out`, then `output.dir`, then `$ISAC_OUT_DIR`, then `./out`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output.dir {
            return p.clone();
        }
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Applies `section.key=value`. The value is read as a TOML value when it
/// parses as one and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .with_context(|| format!("override `{assignment}` is not of the form section.key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override `{assignment}` has an empty key");
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .with_context(|| format!("override `{assignment}`: `{k}` is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
