//! Classification metrics and cross-run aggregation.

use std::fmt;

use thiserror::Error;

use crate::pose::ShotLabel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("metric needs at least one example")]
    EmptyInput,
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("AUC-ROC needs both classes in the test set")]
    SingleClassTest,
    #[error("aggregation needs at least two runs, got {0}")]
    TooFewRuns(usize),
}

fn check_lengths(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        return Err(MetricsError::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

pub fn accuracy(labels: &[ShotLabel], predictions: &[ShotLabel]) -> Result<f64, MetricsError> {
    check_lengths(labels.len(), predictions.len())?;
    let correct = labels.iter().zip(predictions).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Binary F1 with High as the positive class; 0 when precision + recall
/// is 0.
pub fn f1_score(labels: &[ShotLabel], predictions: &[ShotLabel]) -> Result<f64, MetricsError> {
    check_lengths(labels.len(), predictions.len())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&l, &p) in labels.iter().zip(predictions) {
        match (l.is_high(), p.is_high()) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN)
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

/// Probability that a random High example outscores a random Low one,
/// ties counted as ½. Computed from mid-ranks in `O(n log n)`.
pub fn auc_roc(labels: &[ShotLabel], scores: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(labels.len(), scores.len())?;
    let n_high = labels.iter().filter(|l| l.is_high()).count();
    let n_low = labels.len() - n_high;
    if n_high == 0 || n_low == 0 {
        return Err(MetricsError::SingleClassTest);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // doubled ranks keep tie mid-ranks integral
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let mid_x2 = (i + 1 + j) as u128; // 2 * mean of ranks i+1..=j
        let highs = order[i..j].iter().filter(|&&k| labels[k].is_high()).count() as u128;
        rank_sum_x2 += mid_x2 * highs;
        i = j;
    }
    let nh = n_high as u128;
    let u_x2 = rank_sum_x2 - nh * (nh + 1);
    Ok(u_x2 as f64 / (2 * n_high * n_low) as f64)
}

/// Metrics of one CV split.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// `None` when the model kind does not use a validation folder.
    pub val_folder: Option<String>,
    pub test_folder: String,
    pub accuracy: f64,
    pub auc_roc: f64,
    pub f1: f64,
    pub n_test: usize,
}

pub const RUNS_CSV_HEADER: &str = "val_folder,test_folder,accuracy,auc_roc,f1,n_test";

impl RunResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{}",
            self.val_folder.as_deref().unwrap_or(""),
            self.test_folder,
            self.accuracy,
            self.auc_roc,
            self.f1,
            self.n_test
        )
    }
}

pub fn runs_to_csv(runs: &[RunResult]) -> String {
    let mut out = String::from(RUNS_CSV_HEADER);
    out.push('\n');
    for r in runs {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Mean, sample standard deviation and normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

const Z_95: f64 = 1.96;

pub fn summarize(values: &[f64]) -> Result<MetricSummary, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewRuns(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    let half = Z_95 * std / (n as f64).sqrt();
    Ok(MetricSummary {
        mean,
        std,
        ci_low: mean - half,
        ci_high: mean + half,
    })
}

impl fmt::Display for MetricSummary {
    /// `0.87 ± 0.06 [0.86, 0.88]`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.2} ± {:.2} [{:.2}, {:.2}]",
            self.mean, self.std, self.ci_low, self.ci_high
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateReport {
    pub accuracy: MetricSummary,
    pub auc_roc: MetricSummary,
    pub f1: MetricSummary,
    pub runs: usize,
}

pub fn aggregate(runs: &[RunResult]) -> Result<AggregateReport, MetricsError> {
    let pick = |f: fn(&RunResult) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    Ok(AggregateReport {
        accuracy: summarize(&pick(|r| r.accuracy))?,
        auc_roc: summarize(&pick(|r| r.auc_roc))?,
        f1: summarize(&pick(|r| r.f1))?,
        runs: runs.len(),
    })
}

impl AggregateReport {
    fn rows(&self) -> [(&'static str, &MetricSummary); 3] {
        [("accuracy", &self.accuracy), ("auc_roc", &self.auc_roc), ("f1", &self.f1)]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,mean,std,ci_low,ci_high,n_runs\n");
        for (name, s) in self.rows() {
            out.push_str(&format!(
                "{name},{:.6},{:.6},{:.6},{:.6},{}\n",
                s.mean, s.std, s.ci_low, s.ci_high, self.runs
            ));
        }
        out
    }

    /// One table row in the `mean ± std [low, high]` layout.
    pub fn table_row(&self, label: &str) -> String {
        format!("{label:<14} | {} | {} | {}", self.accuracy, self.auc_roc, self.f1)
    }

    pub fn table_header() -> String {
        format!(
            "{:<14} | {:<24} | {:<24} | {:<24}",
            "Classifier", "Accuracy", "AUC-ROC", "F1 Score"
        )
    }
}
