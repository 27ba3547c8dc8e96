//! The three classifier kinds behind one train/predict contract.

mod forest;
mod model;
mod motion_range;
mod network;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{AdamConfig, NnError};
use crate::preprocess::PreprocessError;

pub use forest::{DecisionTree, ForestConfig, RandomForest, TreeNode};
pub use model::{ModelParams, TrainedModel, TrainingMeta};
pub use motion_range::motion_range_features;
pub use network::{Cnn1d, CnnConfig, LstmSeq, Network};
pub use train::{train_forest, train_neural, EarlyStopping, StopDecision};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("validation set must be non-empty and contain both classes")]
    InvalidValidation,
    #[error("input does not match the model's training-time config: {0}")]
    ConfigMismatch(String),
    #[error("unlabeled example {0}")]
    Unlabeled(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    MotionRangeForest,
    Cnn1d,
    LstmSeq,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::MotionRangeForest, ModelKind::Cnn1d, ModelKind::LstmSeq];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MotionRangeForest => "motion-range",
            ModelKind::Cnn1d => "cnn1d",
            ModelKind::LstmSeq => "lstm",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ModelKind::MotionRangeForest => 0,
            ModelKind::Cnn1d => 1,
            ModelKind::LstmSeq => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    /// Whether training uses a validation folder for early stopping.
    pub fn uses_validation(self) -> bool {
        !matches!(self, ModelKind::MotionRangeForest)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "motion-range" | "motion_range" | "forest" | "motionrangeforest" => Ok(ModelKind::MotionRangeForest),
            "cnn1d" | "cnn" | "1d-cnn" => Ok(ModelKind::Cnn1d),
            "lstm" | "lstmseq" => Ok(ModelKind::LstmSeq),
            other => Err(format!("unknown model kind {other:?} (expected motion-range, cnn1d, lstm)")),
        }
    }
}

/// Network widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub cnn_kernel: usize,
    pub cnn_channels1: usize,
    pub cnn_channels2: usize,
    pub cnn_pool: usize,
    pub lstm_hidden: usize,
}

impl ArchConfig {
    /// Padded length the CNN needs for a series capped at `cap` steps.
    pub fn cnn_input_rows(&self, cap: usize) -> usize {
        cap.max(network::cnn_min_rows(self.cnn_kernel, self.cnn_pool))
    }
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            cnn_kernel: 5,
            cnn_channels1: 32,
            cnn_channels2: 64,
            cnn_pool: 2,
            lstm_hidden: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without validation-F1 improvement before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Weight the loss by inverse class frequency.
    pub class_weighting: bool,
    pub forest: ForestConfig,
    pub arch: ArchConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 2500,
            patience: 100,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
            class_weighting: false,
            forest: ForestConfig::default(),
            arch: ArchConfig::default(),
        }
    }
}
