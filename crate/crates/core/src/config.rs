//! Run configuration: a JSON object with flat dotted keys, e.g.
//! `{"seed": 7, "preprocess.cap": 30, "train.max_epochs": 200}`.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::classifiers::TrainConfig;
use crate::preprocess::PreprocessConfig;
use crate::segment::SegmentConfig;

pub const SEED_ENV: &str = "SHOTINTENT_SEED";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {key:?}: {detail}")]
    InvalidValue { key: String, detail: String },
    #[error("config must be a JSON object of dotted keys: {0}")]
    Malformed(String),
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub detections: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `None` until resolved against flags and the environment.
    pub seed: Option<u64>,
    pub preprocess: PreprocessConfig,
    pub train: TrainConfig,
    pub workers: usize,
    pub segment: SegmentConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            preprocess: PreprocessConfig::default(),
            train: TrainConfig::default(),
            workers: 1,
            segment: SegmentConfig::default(),
            paths: Paths::default(),
        }
    }
}

fn invalid(key: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_owned(),
        detail: detail.into(),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64, ConfigError> {
    v.as_u64().ok_or_else(|| invalid(key, format!("expected a non-negative integer, got {v}")))
}

fn as_usize(key: &str, v: &Value) -> Result<usize, ConfigError> {
    usize::try_from(as_u64(key, v)?).map_err(|_| invalid(key, "integer too large"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| invalid(key, format!("expected a finite number, got {v}")))
}

fn as_bool(key: &str, v: &Value) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| invalid(key, format!("expected true or false, got {v}")))
}

fn as_opt_usize(key: &str, v: &Value) -> Result<Option<usize>, ConfigError> {
    if v.is_null() {
        Ok(None)
    } else {
        as_usize(key, v).map(Some)
    }
}

fn as_path(key: &str, v: &Value) -> Result<Option<PathBuf>, ConfigError> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) => Ok(Some(PathBuf::from(s))),
        _ => Err(invalid(key, format!("expected a path string, got {v}"))),
    }
}

fn path_value(p: &Option<PathBuf>) -> Value {
    p.as_ref()
        .map(|p| Value::String(p.display().to_string()))
        .unwrap_or(Value::Null)
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(ConfigError::Malformed("top level is not an object".into()));
        };
        let mut cfg = RunConfig::default();
        for (key, v) in &map {
            cfg.set(key, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    /// Applies a `key=value` override; the value is read as JSON, or as a
    /// bare string if it is not valid JSON.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Malformed(format!("override {assignment:?} is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        self.set(key.trim(), &value)
    }

    pub fn set(&mut self, key: &str, v: &Value) -> Result<(), ConfigError> {
        let t = &mut self.train;
        let s = &mut self.segment;
        match key {
            "seed" => self.seed = Some(as_u64(key, v)?),
            "preprocess.drop" => self.preprocess.drop = as_usize(key, v)?,
            "preprocess.cap" => {
                let cap = as_usize(key, v)?;
                if cap == 0 {
                    return Err(invalid(key, "must be positive"));
                }
                self.preprocess.cap = cap;
            }
            "preprocess.v_min" => self.preprocess.v_min = as_f64(key, v)?,
            "train.max_epochs" => t.max_epochs = as_usize(key, v)?,
            "train.patience" => t.patience = as_usize(key, v)?,
            "train.batch_size" => t.batch_size = as_usize(key, v)?.max(1),
            "train.lr" => t.adam.lr = as_f64(key, v)?,
            "train.beta1" => t.adam.beta1 = as_f64(key, v)?,
            "train.beta2" => t.adam.beta2 = as_f64(key, v)?,
            "train.eps" => t.adam.eps = as_f64(key, v)?,
            "train.class_weighting" => t.class_weighting = as_bool(key, v)?,
            "arch.cnn_kernel" => t.arch.cnn_kernel = as_usize(key, v)?,
            "arch.cnn_channels1" => t.arch.cnn_channels1 = as_usize(key, v)?,
            "arch.cnn_channels2" => t.arch.cnn_channels2 = as_usize(key, v)?,
            "arch.cnn_pool" => t.arch.cnn_pool = as_usize(key, v)?,
            "arch.lstm_hidden" => t.arch.lstm_hidden = as_usize(key, v)?,
            "forest.n_trees" => t.forest.n_trees = as_usize(key, v)?,
            "forest.max_features" => t.forest.max_features = as_opt_usize(key, v)?,
            "forest.max_depth" => t.forest.max_depth = as_opt_usize(key, v)?,
            "forest.bootstrap" => t.forest.bootstrap = as_bool(key, v)?,
            "cv.workers" => self.workers = as_usize(key, v)?.max(1),
            "segment.region.x_min" => s.region.x_min = as_f64(key, v)?,
            "segment.region.x_max" => s.region.x_max = as_f64(key, v)?,
            "segment.region.y_min" => s.region.y_min = as_f64(key, v)?,
            "segment.region.y_max" => s.region.y_max = as_f64(key, v)?,
            "segment.band.x_min" => s.band.x_min = as_f64(key, v)?,
            "segment.band.x_max" => s.band.x_max = as_f64(key, v)?,
            "segment.dwell" => s.dwell = as_usize(key, v)?,
            "segment.gap_max" => s.gap_max = as_usize(key, v)?,
            "segment.conf_min" => s.conf_min = as_f64(key, v)?,
            "segment.max_jump" => s.max_jump = as_f64(key, v)?,
            "paths.data" => self.paths.data = as_path(key, v)?,
            "paths.out" => self.paths.out = as_path(key, v)?,
            "paths.records" => self.paths.records = as_path(key, v)?,
            "paths.predictions" => self.paths.predictions = as_path(key, v)?,
            "paths.detections" => self.paths.detections = as_path(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    /// Every key with its current value, in key order.
    pub fn entries(&self) -> BTreeMap<&'static str, Value> {
        let t = &self.train;
        let s = &self.segment;
        BTreeMap::from([
            ("seed", json!(self.seed)),
            ("preprocess.drop", json!(self.preprocess.drop)),
            ("preprocess.cap", json!(self.preprocess.cap)),
            ("preprocess.v_min", json!(self.preprocess.v_min)),
            ("train.max_epochs", json!(t.max_epochs)),
            ("train.patience", json!(t.patience)),
            ("train.batch_size", json!(t.batch_size)),
            ("train.lr", json!(t.adam.lr)),
            ("train.beta1", json!(t.adam.beta1)),
            ("train.beta2", json!(t.adam.beta2)),
            ("train.eps", json!(t.adam.eps)),
            ("train.class_weighting", json!(t.class_weighting)),
            ("arch.cnn_kernel", json!(t.arch.cnn_kernel)),
            ("arch.cnn_channels1", json!(t.arch.cnn_channels1)),
            ("arch.cnn_channels2", json!(t.arch.cnn_channels2)),
            ("arch.cnn_pool", json!(t.arch.cnn_pool)),
            ("arch.lstm_hidden", json!(t.arch.lstm_hidden)),
            ("forest.n_trees", json!(t.forest.n_trees)),
            ("forest.max_features", json!(t.forest.max_features)),
            ("forest.max_depth", json!(t.forest.max_depth)),
            ("forest.bootstrap", json!(t.forest.bootstrap)),
            ("cv.workers", json!(self.workers)),
            ("segment.region.x_min", json!(s.region.x_min)),
            ("segment.region.x_max", json!(s.region.x_max)),
            ("segment.region.y_min", json!(s.region.y_min)),
            ("segment.region.y_max", json!(s.region.y_max)),
            ("segment.band.x_min", json!(s.band.x_min)),
            ("segment.band.x_max", json!(s.band.x_max)),
            ("segment.dwell", json!(s.dwell)),
            ("segment.gap_max", json!(s.gap_max)),
            ("segment.conf_min", json!(s.conf_min)),
            ("segment.max_jump", json!(s.max_jump)),
            ("paths.data", path_value(&self.paths.data)),
            ("paths.out", path_value(&self.paths.out)),
            ("paths.records", path_value(&self.paths.records)),
            ("paths.predictions", path_value(&self.paths.predictions)),
            ("paths.detections", path_value(&self.paths.detections)),
        ])
    }

    /// Canonical flat JSON; parsing it back yields an equal config.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries()).expect("config serializes")
    }

    /// Single-line form of [`RunConfig::to_json`], for logs.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.entries()).expect("config serializes")
    }

    /// Fixes the master seed: flag, then config file, then
    /// `SHOTINTENT_SEED`, then 0. The seed is copied into the training
    /// config.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> Result<u64, ConfigError> {
        let env = std::env::var(SEED_ENV).ok();
        let seed = resolve_seed(flag, self.seed, env.as_deref())?;
        self.seed = Some(seed);
        self.train.seed = seed;
        Ok(seed)
    }
}

pub fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<u64, ConfigError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match env {
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| invalid(SEED_ENV, format!("{raw:?} is not a non-negative integer"))),
        None => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys() {
        let cfg = RunConfig::from_json_str(
            r#"{"seed": 7, "preprocess.cap": 30, "train.lr": 0.01, "forest.max_depth": null, "cv.workers": 4, "paths.data": "/d"}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.preprocess.cap, 30);
        assert_eq!(cfg.train.adam.lr, 0.01);
        assert_eq!(cfg.workers, 4);
        assert_eq!(cfg.paths.data, Some(PathBuf::from("/d")));
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert_eq!(
            RunConfig::from_json_str(r#"{"train.learning_rate": 1}"#),
            Err(ConfigError::UnknownKey("train.learning_rate".into()))
        );
        assert!(matches!(
            RunConfig::from_json_str(r#"{"preprocess.cap": -3}"#),
            Err(ConfigError::InvalidValue { .. })
        ));
        assert!(matches!(
            RunConfig::from_json_str(r#"{"preprocess.cap": 0}"#),
            Err(ConfigError::InvalidValue { .. })
        ));
        assert!(matches!(RunConfig::from_json_str("[1]"), Err(ConfigError::Malformed(_))));
    }

    #[test]
    fn dump_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("train.max_epochs=12").unwrap();
        cfg.apply_override("paths.out=results").unwrap();
        cfg.apply_override("seed=3").unwrap();
        assert_eq!(RunConfig::from_json_str(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(cfg.paths.out, Some(PathBuf::from("results")));
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some("3")), Ok(1));
        assert_eq!(resolve_seed(None, Some(2), Some("3")), Ok(2));
        assert_eq!(resolve_seed(None, None, Some("3")), Ok(3));
        assert_eq!(resolve_seed(None, None, None), Ok(0));
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }
}
