//! Ordered leave-pair-out cross-validation over match folders, plus the
//! clip-length ablation.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::classifiers::{
    motion_range_features, train_forest, train_neural, ClassifierError, ModelKind, TrainConfig, TrainedModel,
};
use crate::exec::{self, Execution};
use crate::metrics::{self, AggregateReport, MetricsError, RunResult};
use crate::pose::{FoldedDataset, ShotLabel};
use crate::preprocess::{pad_mask, prepare, FeatureSeries, PaddedSeries, PreprocessConfig, PreprocessError};
use crate::seed;

#[derive(Debug, Error)]
pub enum CvError {
    #[error("cross-validation needs at least {needed} folders, got {found}")]
    TooFewFolders { needed: usize, found: usize },
    #[error("clip {clip_id}: {source}")]
    Preprocess {
        clip_id: String,
        #[source]
        source: PreprocessError,
    },
    #[error("split {split}: {source}")]
    Training {
        split: Split,
        #[source]
        source: ClassifierError,
    },
    #[error("clip length must be positive")]
    InvalidLength,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One run: train on every folder except `val` and `test`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Split {
    /// `None` for leave-one-out runs of models without a validation phase.
    pub val: Option<String>,
    pub test: String,
}

impl Split {
    /// Per-split seed, a pure function of the master seed and folder ids.
    pub fn seed(&self, master: u64) -> u64 {
        seed::derive(master, &[self.val.as_deref().unwrap_or(""), &self.test])
    }

    fn excludes(&self, folder: &str) -> bool {
        self.test == folder || self.val.as_deref() == Some(folder)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "val={} test={}", self.val.as_deref().unwrap_or("-"), self.test)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    splits: Vec<Split>,
}

impl SplitPlan {
    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }
}

/// Every ordered (validation, test) pair of distinct folders, in
/// lexicographic folder order.
pub fn enumerate_splits(dataset: &FoldedDataset) -> Result<SplitPlan, CvError> {
    let ids: Vec<&str> = dataset.folder_ids().collect();
    if ids.len() < 3 {
        return Err(CvError::TooFewFolders { needed: 3, found: ids.len() });
    }
    let mut splits = Vec::with_capacity(ids.len() * (ids.len() - 1));
    for &val in &ids {
        for &test in &ids {
            if val != test {
                splits.push(Split {
                    val: Some(val.to_owned()),
                    test: test.to_owned(),
                });
            }
        }
    }
    Ok(SplitPlan { splits })
}

/// One run per folder with that folder held out for testing.
pub fn enumerate_leave_one_out(dataset: &FoldedDataset) -> Result<SplitPlan, CvError> {
    let ids: Vec<&str> = dataset.folder_ids().collect();
    if ids.len() < 2 {
        return Err(CvError::TooFewFolders { needed: 2, found: ids.len() });
    }
    Ok(SplitPlan {
        splits: ids
            .into_iter()
            .map(|test| Split {
                val: None,
                test: test.to_owned(),
            })
            .collect(),
    })
}

/// The plan a model kind is evaluated under.
pub fn plan_for(dataset: &FoldedDataset, kind: ModelKind) -> Result<SplitPlan, CvError> {
    if kind.uses_validation() {
        enumerate_splits(dataset)
    } else {
        enumerate_leave_one_out(dataset)
    }
}

/// Preprocessed clips grouped by folder.
#[derive(Clone, Debug)]
pub struct PreparedDataset {
    folders: BTreeMap<String, Vec<FeatureSeries>>,
    preprocess: PreprocessConfig,
}

impl PreparedDataset {
    pub fn new(dataset: &FoldedDataset, preprocess: &PreprocessConfig, exec: Execution) -> Result<Self, CvError> {
        let clips: Vec<_> = dataset.folders().flat_map(|(_, seqs)| seqs.iter()).collect();
        let prepared = exec::map(exec, &clips, |seq| {
            prepare(seq, preprocess).map_err(|source| CvError::Preprocess {
                clip_id: seq.clip_id.clone(),
                source,
            })
        });
        let mut folders: BTreeMap<String, Vec<FeatureSeries>> = BTreeMap::new();
        for series in prepared {
            let series = series?;
            folders.entry(series.meta.folder_id.clone()).or_default().push(series);
        }
        Ok(PreparedDataset {
            folders,
            preprocess: *preprocess,
        })
    }

    pub fn preprocess(&self) -> &PreprocessConfig {
        &self.preprocess
    }

    /// Every prepared clip, folders in lexicographic order.
    pub fn clips(&self) -> impl Iterator<Item = &FeatureSeries> {
        self.folders.values().flatten()
    }

    pub fn folder(&self, id: &str) -> &[FeatureSeries] {
        self.folders.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    fn has_both_classes(&self, id: &str) -> bool {
        let clips = self.folder(id);
        let high = clips.iter().filter(|c| c.meta.label == Some(ShotLabel::High)).count();
        let low = clips.iter().filter(|c| c.meta.label == Some(ShotLabel::Low)).count();
        high > 0 && low > 0
    }

    fn training_clips<'a>(&'a self, split: &'a Split) -> impl Iterator<Item = &'a FeatureSeries> + 'a {
        self.folders
            .iter()
            .filter(move |(id, _)| !split.excludes(id))
            .flat_map(|(_, clips)| clips.iter())
    }
}

fn pad_all<'a>(
    clips: impl Iterator<Item = &'a FeatureSeries>,
    rows: usize,
) -> Result<Vec<PaddedSeries>, PreprocessError> {
    clips.map(|c| pad_mask(c, rows)).collect()
}

fn padded_rows(kind: ModelKind, config: &TrainConfig, preprocess: &PreprocessConfig) -> usize {
    match kind {
        ModelKind::Cnn1d => config.arch.cnn_input_rows(preprocess.cap),
        _ => preprocess.cap,
    }
}

fn labels_of(clips: &[&FeatureSeries]) -> Result<Vec<ShotLabel>, ClassifierError> {
    clips
        .iter()
        .map(|c| c.meta.label.ok_or_else(|| ClassifierError::Unlabeled(c.meta.clip_id.clone())))
        .collect()
}

/// Fits `kind` on the training folders of `split`. Test-folder clips are
/// never read.
pub fn train_split(
    data: &PreparedDataset,
    split: &Split,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<TrainedModel, ClassifierError> {
    let config = TrainConfig {
        seed: split.seed(config.seed),
        ..*config
    };
    let train: Vec<&FeatureSeries> = data.training_clips(split).collect();
    fit_kind(data, train, split.val.as_deref(), kind, &config)
}

/// Fits a final model on every folder except `val`, which drives early
/// stopping for the networks and is ignored by the forest.
pub fn train_all(
    data: &PreparedDataset,
    val: Option<&str>,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<TrainedModel, ClassifierError> {
    let val = if kind.uses_validation() { val } else { None };
    let config = TrainConfig {
        seed: seed::derive(config.seed, &["final", val.unwrap_or("")]),
        ..*config
    };
    let train: Vec<&FeatureSeries> = data
        .folders
        .iter()
        .filter(|(id, _)| Some(id.as_str()) != val)
        .flat_map(|(_, clips)| clips.iter())
        .collect();
    fit_kind(data, train, val, kind, &config)
}

fn fit_kind(
    data: &PreparedDataset,
    train: Vec<&FeatureSeries>,
    val: Option<&str>,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<TrainedModel, ClassifierError> {
    let preprocess = data.preprocess();
    match kind {
        ModelKind::MotionRangeForest => {
            let vectors: Vec<Vec<f64>> = train.iter().map(|c| motion_range_features(c)).collect();
            train_forest(&vectors, &labels_of(&train)?, config, preprocess)
        }
        _ => {
            let val_id = val.ok_or(ClassifierError::InvalidValidation)?;
            let rows = padded_rows(kind, config, preprocess);
            let train = pad_all(train.into_iter(), rows)?;
            let val = pad_all(data.folder(val_id).iter(), rows)?;
            train_neural(kind, &train, &val, config, preprocess)
        }
    }
}

/// Scores a trained model on the test folder of `split`.
pub fn evaluate_split(data: &PreparedDataset, split: &Split, model: &TrainedModel) -> Result<RunResult, CvError> {
    let test: Vec<&FeatureSeries> = data.folder(&split.test).iter().collect();
    let annotate = |source: ClassifierError| CvError::Training {
        split: split.clone(),
        source,
    };
    let labels = labels_of(&test).map_err(annotate)?;
    let scores = test
        .iter()
        .map(|c| model.predict_proba(c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(annotate)?;
    let preds: Vec<ShotLabel> = scores.iter().map(|&p| ShotLabel::from_probability(p)).collect();
    Ok(RunResult {
        val_folder: split.val.clone(),
        test_folder: split.test.clone(),
        accuracy: metrics::accuracy(&labels, &preds)?,
        auc_roc: metrics::auc_roc(&labels, &scores)?,
        f1: metrics::f1_score(&labels, &preds)?,
        n_test: test.len(),
    })
}

#[derive(Clone, Debug)]
pub struct CvOutcome {
    /// Sorted by split.
    pub runs: Vec<RunResult>,
    pub report: AggregateReport,
    /// Splits whose validation or test folder lacks a class.
    pub skipped: Vec<Split>,
}

/// Full cross-validation of one model kind. Splits run on `exec`; the
/// result is independent of the worker count.
pub fn run_cv(
    dataset: &FoldedDataset,
    kind: ModelKind,
    config: &TrainConfig,
    preprocess: &PreprocessConfig,
    exec: Execution,
) -> Result<CvOutcome, CvError> {
    let plan = plan_for(dataset, kind)?;
    let data = PreparedDataset::new(dataset, preprocess, exec)?;
    run_plan(&data, &plan, kind, config, exec)
}

pub fn run_plan(
    data: &PreparedDataset,
    plan: &SplitPlan,
    kind: ModelKind,
    config: &TrainConfig,
    exec: Execution,
) -> Result<CvOutcome, CvError> {
    let (usable, skipped): (Vec<Split>, Vec<Split>) = plan.splits().iter().cloned().partition(|s| {
        data.has_both_classes(&s.test) && s.val.as_deref().is_none_or(|v| data.has_both_classes(v))
    });
    for s in &skipped {
        log::warn!("skipping split {s}: a held-out folder lacks one class");
    }
    log::info!("{kind}: running {} splits", usable.len());
    let results = exec::map(exec, &usable, |split| {
        let model = train_split(data, split, kind, config).map_err(|source| CvError::Training {
            split: split.clone(),
            source,
        })?;
        if model.meta.no_improvement {
            log::warn!("split {split}: validation F1 never improved");
        }
        let run = evaluate_split(data, split, &model)?;
        log::debug!("split {split}: acc {:.3} auc {:.3} f1 {:.3}", run.accuracy, run.auc_roc, run.f1);
        Ok((split.clone(), run))
    });
    let mut runs = results.into_iter().collect::<Result<Vec<_>, CvError>>()?;
    runs.sort_by(|a, b| a.0.cmp(&b.0));
    let runs: Vec<RunResult> = runs.into_iter().map(|(_, r)| r).collect();
    let report = metrics::aggregate(&runs)?;
    Ok(CvOutcome { runs, report, skipped })
}

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub length: usize,
    pub report: AggregateReport,
}

/// Re-runs cross-validation with the clip cap set to each length.
pub fn ablate_clip_length(
    dataset: &FoldedDataset,
    kind: ModelKind,
    lengths: &[usize],
    config: &TrainConfig,
    preprocess: &PreprocessConfig,
    exec: Execution,
) -> Result<Vec<AblationRow>, CvError> {
    if lengths.contains(&0) {
        return Err(CvError::InvalidLength);
    }
    lengths
        .iter()
        .map(|&length| {
            let pre = PreprocessConfig {
                cap: length,
                ..*preprocess
            };
            log::info!("ablation: cap {length}");
            let outcome = run_cv(dataset, kind, config, &pre, exec)?;
            Ok(AblationRow {
                length,
                report: outcome.report,
            })
        })
        .collect()
}
