use super::forest::RandomForest;
use super::motion_range::motion_range_features;
use super::network::{Cnn1d, LstmSeq, Network};
use super::{ArchConfig, ClassifierError, ModelKind};
use crate::pose::ShotLabel;
use crate::preprocess::{pad_mask, FeatureSeries, PaddedSeries, PreprocessConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams {
    Forest(RandomForest),
    Cnn(Cnn1d),
    Lstm(LstmSeq),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// `None` for the forest, which has no validation phase.
    pub best_val_f1: Option<f64>,
    pub seed: u64,
    /// Validation F1 never beat the untrained network; parameters are the
    /// initial ones.
    pub no_improvement: bool,
}

/// A fitted classifier plus the preprocessing it expects.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub preprocess: PreprocessConfig,
    pub arch: ArchConfig,
    /// Padded length the network was trained on.
    pub input_rows: usize,
    pub features: usize,
    pub meta: TrainingMeta,
}

impl TrainedModel {
    /// Probability of High for a series already run through the model's
    /// preprocessing.
    pub fn predict_proba(&self, series: &FeatureSeries) -> Result<f64, ClassifierError> {
        if series.features() != self.features {
            return Err(ClassifierError::ConfigMismatch(format!(
                "{} features, model expects {}",
                series.features(),
                self.features
            )));
        }
        match &self.params {
            ModelParams::Forest(forest) => Ok(forest.predict_proba(&motion_range_features(series))),
            _ => {
                let padded = pad_mask(series, self.input_rows).map_err(|e| ClassifierError::ConfigMismatch(e.to_string()))?;
                self.predict_proba_padded(&padded)
            }
        }
    }

    pub fn predict_proba_padded(&self, input: &PaddedSeries) -> Result<f64, ClassifierError> {
        if input.features() != self.features {
            return Err(ClassifierError::ConfigMismatch(format!(
                "{} features, model expects {}",
                input.features(),
                self.features
            )));
        }
        match &self.params {
            ModelParams::Forest(forest) => Ok(forest.predict_proba(&motion_range_features(&input.unpad()))),
            ModelParams::Cnn(net) => {
                if input.rows() != self.input_rows {
                    return Err(ClassifierError::ConfigMismatch(format!(
                        "{} padded rows, model expects {}",
                        input.rows(),
                        self.input_rows
                    )));
                }
                Ok(net.probability_high(input)?)
            }
            ModelParams::Lstm(net) => {
                if input.valid_length() > self.input_rows {
                    return Err(ClassifierError::ConfigMismatch(format!(
                        "{} steps, model was trained on at most {}",
                        input.valid_length(),
                        self.input_rows
                    )));
                }
                Ok(net.probability_high(input)?)
            }
        }
    }

    pub fn predict(&self, series: &FeatureSeries) -> Result<ShotLabel, ClassifierError> {
        self.predict_proba(series).map(ShotLabel::from_probability)
    }
}
