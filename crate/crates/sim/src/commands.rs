//! The subcommands, reading and writing fixed file names in the output
//! directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::checkpoint;
use crate::config::ExperimentConfig;
use crate::dataset::Dataset;
use crate::experiment;
use crate::metrics::{self, MetricRow};

pub const TRAIN_DATA: &str = "train.isac";
pub const EVAL_DATA: &str = "eval.isac";
pub const CHECKPOINT: &str = "model.ckpt";
pub const TRAINING_CSV: &str = "training.csv";
pub const EVAL_CSV: &str = "eval.csv";
pub const SENSE_CSV: &str = "sense.csv";
pub const BER_CSV: &str = "ber.csv";
pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const TABLES_DIR: &str = "tables";

/// Resolved run context.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Run {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self { cfg, out })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn or_default(&self, given: Option<&Path>, name: &str) -> PathBuf {
        given.map(Path::to_path_buf).unwrap_or_else(|| self.path(name))
    }

    /// Writes both datasets and the resolved config.
    pub fn generate(&self) -> Result<(Dataset, Dataset)> {
        let (train, eval) = experiment::generate(&self.cfg)?;
        train.write(&self.path(TRAIN_DATA))?;
        eval.write(&self.path(EVAL_DATA))?;
        std::fs::write(self.path(CONFIG_SNAPSHOT), self.cfg.to_toml()?)?;
        eprintln!("generated {} training and {} evaluation samples", train.len(), eval.len());
        Ok((train, eval))
    }

    pub fn train(&self, train_data: Option<&Path>, eval_data: Option<&Path>) -> Result<()> {
        let train = Dataset::read(&self.or_default(train_data, TRAIN_DATA))?;
        let eval = Dataset::read(&self.or_default(eval_data, EVAL_DATA))?;
        let (model, records) = experiment::train_model(&self.cfg, &train, &eval)?;
        for r in &records {
            eprintln!("epoch {:3}  train {:8.3} dB  eval {:8.3} dB", r.epoch, r.train_nmse_db, r.eval_nmse_db);
        }
        checkpoint::write(&model, &self.path(CHECKPOINT))?;
        metrics::write_training(&self.path(TRAINING_CSV), &records)
    }

    pub fn eval(&self, ckpt: Option<&Path>, data: Option<&Path>) -> Result<Vec<MetricRow>> {
        let model = checkpoint::read(&self.or_default(ckpt, CHECKPOINT))?;
        let ds = Dataset::read(&self.or_default(data, EVAL_DATA))?;
        let rows = experiment::eval_rows(&model, &ds)?;
        metrics::write_rows(&self.path(EVAL_CSV), &rows)?;
        Ok(rows)
    }

    pub fn sense(&self, ckpt: Option<&Path>, data: Option<&Path>) -> Result<Vec<MetricRow>> {
        let model = checkpoint::read(&self.or_default(ckpt, CHECKPOINT))?;
        let ds = Dataset::read(&self.or_default(data, EVAL_DATA))?;
        let rows = experiment::sense_rows(&self.cfg, &model, &ds)?;
        metrics::write_rows(&self.path(SENSE_CSV), &rows)?;
        Ok(rows)
    }

    pub fn ber(&self, ckpt: Option<&Path>) -> Result<Vec<MetricRow>> {
        let model = checkpoint::read(&self.or_default(ckpt, CHECKPOINT))?;
        let rows = experiment::ber_rows(&self.cfg, &model)?;
        metrics::write_rows(&self.path(BER_CSV), &rows)?;
        Ok(rows)
    }

    /// Pivots every metric CSV present into `tables/<metric>.csv` and copies
    /// the training curve to `tables/training.csv`.
    pub fn report(&self) -> Result<Vec<PathBuf>> {
        let mut rows = Vec::new();
        for name in [EVAL_CSV, SENSE_CSV, BER_CSV] {
            let p = self.path(name);
            if p.exists() {
                rows.extend(metrics::read_rows(&p)?);
            }
        }
        let dir = self.path(TABLES_DIR);
        std::fs::create_dir_all(&dir)?;
        let mut written = Vec::new();
        for (metric, text) in metrics::pivot(&rows) {
            let p = dir.join(format!("{metric}.csv"));
            std::fs::write(&p, text)?;
            written.push(p);
        }
        let training = self.path(TRAINING_CSV);
        if training.exists() {
            let p = dir.join(TRAINING_CSV);
            std::fs::copy(&training, &p)?;
            written.push(p);
        }
        Ok(written)
    }
}
