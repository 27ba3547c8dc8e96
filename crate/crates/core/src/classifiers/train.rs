use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::forest::RandomForest;
use super::model::{ModelParams, TrainedModel, TrainingMeta};
use super::network::{Cnn1d, CnnConfig, LstmSeq, Network};
use super::{ClassifierError, ModelKind, TrainConfig};
use crate::metrics;
use crate::nn::{Adam, Tape, Tensor, Var};
use crate::pose::ShotLabel;
use crate::preprocess::{PaddedSeries, PreprocessConfig};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Wait,
    Stop,
}

/// Patience-based early stopping on a score that should increase.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    /// `baseline` is the score before any training (epoch 0).
    pub fn new(patience: usize, baseline: f64) -> Self {
        EarlyStopping {
            patience: patience.max(1),
            best: baseline,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> StopDecision {
        if score > self.best {
            self.best = score;
            self.best_epoch = epoch;
            self.since_best = 0;
            return StopDecision::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Wait
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

fn label_of(p: &PaddedSeries) -> Result<ShotLabel, ClassifierError> {
    p.label().ok_or_else(|| ClassifierError::Unlabeled(p.meta.clip_id.clone()))
}

fn validation_f1<N: Network>(net: &N, val: &[PaddedSeries], labels: &[ShotLabel]) -> Result<f64, ClassifierError> {
    let preds = val
        .iter()
        .map(|x| net.probability_high(x).map(ShotLabel::from_probability))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(metrics::f1_score(labels, &preds).expect("validation set is non-empty"))
}

/// Mini-batch Adam with per-epoch reshuffling, keeping the parameter
/// snapshot with the best validation F1.
pub(crate) fn fit_network<N: Network>(
    mut net: N,
    train: &[PaddedSeries],
    val: &[PaddedSeries],
    config: &TrainConfig,
) -> Result<(N, TrainingMeta), ClassifierError> {
    let train_labels = train.iter().map(label_of).collect::<Result<Vec<_>, _>>()?;
    let val_labels = val.iter().map(label_of).collect::<Result<Vec<_>, _>>()?;
    let n_high = train_labels.iter().filter(|l| l.is_high()).count();
    if n_high == 0 || n_high == train_labels.len() {
        return Err(ClassifierError::SingleClassTraining);
    }
    let val_high = val_labels.iter().filter(|l| l.is_high()).count();
    if val.is_empty() || val_high == 0 || val_high == val.len() {
        return Err(ClassifierError::InvalidValidation);
    }
    let rows = train[0].rows();
    if let Some(bad) = train.iter().chain(val).find(|p| p.rows() != rows) {
        return Err(ClassifierError::ConfigMismatch(format!(
            "{} has {} rows, expected {rows}",
            bad.meta.clip_id,
            bad.rows()
        )));
    }

    let class_weight = |l: ShotLabel| -> f64 {
        if !config.class_weighting {
            return 1.0;
        }
        let n = train_labels.len() as f64;
        let count = if l.is_high() { n_high } else { train_labels.len() - n_high };
        n / (2.0 * count as f64)
    };

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed::derive_index(config.seed, 1));
    let mut adam = Adam::new(config.adam, net.params());
    let baseline = validation_f1(&net, val, &val_labels)?;
    let mut stopper = EarlyStopping::new(config.patience, baseline);
    let mut best_params: Vec<Tensor> = net.params().to_vec();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch_size = config.batch_size.max(1);
    let mut epochs_run = 0;

    for epoch in 1..=config.max_epochs.max(1) {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(batch_size) {
            let mut tape = Tape::new();
            let vars: Vec<Var> = net.params().iter().map(|p| tape.param(p.clone())).collect();
            let total_w: f64 = batch.iter().map(|&i| class_weight(train_labels[i])).sum();
            let mut losses = Vec::with_capacity(batch.len());
            for &i in batch {
                let z = net.record(&mut tape, &vars, &train[i])?;
                let w = class_weight(train_labels[i]) / total_w;
                losses.push(tape.softmax_cross_entropy(z, train_labels[i].index(), w)?);
            }
            let loss = tape.add_n(&losses)?;
            let grads = tape.backward(loss)?;
            let g: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(&tape, v)).collect();
            adam.update(net.params_mut(), &g)?;
        }
        epochs_run = epoch;
        let f1 = validation_f1(&net, val, &val_labels)?;
        match stopper.observe(epoch, f1) {
            StopDecision::Improved => best_params = net.params().to_vec(),
            StopDecision::Wait => {}
            StopDecision::Stop => break,
        }
    }

    let no_improvement = stopper.best_epoch() == 0;
    if no_improvement {
        log::warn!(
            "validation F1 never improved on the untrained network ({baseline:.4}); returning initial parameters"
        );
    }
    net.params_mut().clone_from_slice(&best_params);
    Ok((
        net,
        TrainingMeta {
            epochs_run,
            best_epoch: stopper.best_epoch(),
            best_val_f1: Some(stopper.best()),
            seed: config.seed,
            no_improvement,
        },
    ))
}

/// Trains a CNN or LSTM on padded series with validation-F1 early stopping.
pub fn train_neural(
    kind: ModelKind,
    train: &[PaddedSeries],
    val: &[PaddedSeries],
    config: &TrainConfig,
    preprocess: &PreprocessConfig,
) -> Result<TrainedModel, ClassifierError> {
    let first = train.first().ok_or(ClassifierError::SingleClassTraining)?;
    let (rows, features) = (first.rows(), first.features());
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed::derive_index(config.seed, 0));
    let arch = config.arch;
    let (params, meta) = match kind {
        ModelKind::Cnn1d => {
            let net = Cnn1d::new(
                CnnConfig {
                    features,
                    kernel: arch.cnn_kernel,
                    channels1: arch.cnn_channels1,
                    channels2: arch.cnn_channels2,
                    pool: arch.cnn_pool,
                },
                &mut init_rng,
            )?;
            if rows < net.min_rows() {
                return Err(ClassifierError::ConfigMismatch(format!(
                    "cnn needs at least {} padded rows, got {rows}",
                    net.min_rows()
                )));
            }
            let (net, meta) = fit_network(net, train, val, config)?;
            (ModelParams::Cnn(net), meta)
        }
        ModelKind::LstmSeq => {
            let net = LstmSeq::new(features, arch.lstm_hidden, &mut init_rng);
            let (net, meta) = fit_network(net, train, val, config)?;
            (ModelParams::Lstm(net), meta)
        }
        ModelKind::MotionRangeForest => {
            return Err(ClassifierError::ConfigMismatch(
                "the motion-range forest is trained with train_forest".into(),
            ))
        }
    };
    Ok(TrainedModel {
        kind,
        params,
        preprocess: *preprocess,
        arch,
        input_rows: rows,
        features,
        meta,
    })
}

/// Fits the motion-range forest on per-clip range vectors.
pub fn train_forest(
    vectors: &[Vec<f64>],
    labels: &[ShotLabel],
    config: &TrainConfig,
    preprocess: &PreprocessConfig,
) -> Result<TrainedModel, ClassifierError> {
    let forest = RandomForest::fit(vectors, labels, &config.forest, config.seed)?;
    let features = forest.n_features();
    Ok(TrainedModel {
        kind: ModelKind::MotionRangeForest,
        params: ModelParams::Forest(forest),
        preprocess: *preprocess,
        arch: config.arch,
        input_rows: preprocess.cap,
        features,
        meta: TrainingMeta {
            epochs_run: 0,
            best_epoch: 0,
            best_val_f1: None,
            seed: config.seed,
            no_improvement: false,
        },
    })
}
