//! `key = value` run files. Blank lines and lines starting with `#` are
//! skipped; `layer` may repeat and lists the stack top to bottom.

use std::fmt;
use std::path::PathBuf;

use dren::network::{presets, LayerSpec, ModelSpec, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Preset name, used when no `layer` lines are given.
    pub model: String,
    pub layers: Vec<LayerSpec>,
    pub groups: usize,
    pub width: usize,
    pub classes: usize,
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub decay_epoch: Option<usize>,
    pub select_best: bool,
    pub data: Option<PathBuf>,
    pub precision: Precision,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            model: "dren-small".into(),
            layers: Vec::new(),
            groups: 5,
            width: 10,
            classes: 10,
            lr: t.lr,
            momentum: t.momentum,
            epochs: t.epochs,
            batch: t.batch_size,
            seed: t.seed,
            decay_epoch: None,
            select_best: t.select_best,
            data: None,
            precision: Precision::Single,
        }
    }
}

pub const PRESETS: [&str; 4] = ["dren-small", "plain-small", "z2cnn", "z2cnn-dren"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: i + 1,
                key: line.to_string(),
                message: "expected key = value".into(),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|message| CliError::Config {
                line: i + 1,
                key: key.trim().to_string(),
                message,
            })?;
        }
        Ok(cfg)
    }

    /// Applies one setting; also used for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        match key {
            "model" => {
                if !PRESETS.contains(&value) {
                    return Err(format!("unknown model `{value}`; expected one of {PRESETS:?}"));
                }
                self.model = value.into();
            }
            "layer" => self.layers.push(value.parse().map_err(|e: dren::DrenError| e.to_string())?),
            "groups" => self.groups = num(value)?,
            "width" => self.width = num(value)?,
            "classes" => self.classes = num(value)?,
            "lr" => self.lr = num(value)?,
            "momentum" => self.momentum = num(value)?,
            "epochs" => self.epochs = num(value)?,
            "batch" => self.batch = num(value)?,
            "seed" => self.seed = num(value)?,
            "decay_epoch" => self.decay_epoch = Some(num(value)?),
            "select_best" => self.select_best = num(value)?,
            "data" => self.data = Some(PathBuf::from(value)),
            "precision" => {
                self.precision = match value {
                    "single" | "f32" => Precision::Single,
                    "double" | "f64" => Precision::Double,
                    _ => return Err(format!("precision must be single or double, got `{value}`")),
                }
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn model_spec(&self, input: [usize; 3]) -> ModelSpec {
        if !self.layers.is_empty() {
            return ModelSpec::new(input, self.layers.clone());
        }
        match self.model.as_str() {
            "plain-small" => presets::plain_small(input, self.width, self.classes),
            "z2cnn" => presets::z2cnn_plain(self.width, self.classes),
            "z2cnn-dren" => presets::z2cnn_dren(self.groups, self.classes),
            _ => presets::dren_small(input, self.groups, self.classes),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            momentum: self.momentum,
            batch_size: self.batch,
            epochs: self.epochs,
            seed: self.seed,
            decay_epoch: self.decay_epoch,
            select_best: self.select_best,
            ..TrainConfig::default()
        }
    }
}

impl fmt::Display for RunConfig {
    /// Effective settings in the same syntax [`RunConfig::parse`] reads.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model = {}", self.model)?;
        for l in &self.layers {
            writeln!(f, "layer = {l}")?;
        }
        writeln!(f, "groups = {}", self.groups)?;
        writeln!(f, "width = {}", self.width)?;
        writeln!(f, "classes = {}", self.classes)?;
        writeln!(f, "lr = {}", self.lr)?;
        writeln!(f, "momentum = {}", self.momentum)?;
        writeln!(f, "epochs = {}", self.epochs)?;
        writeln!(f, "batch = {}", self.batch)?;
        writeln!(f, "seed = {}", self.seed)?;
        if let Some(d) = self.decay_epoch {
            writeln!(f, "decay_epoch = {d}")?;
        }
        writeln!(f, "select_best = {}", self.select_best)?;
        if let Some(d) = &self.data {
            writeln!(f, "data = {}", d.display())?;
        }
        let p = match self.precision {
            Precision::Single => "single",
            Precision::Double => "double",
        };
        write!(f, "precision = {p}")
    }
}
