//! Pose sequence → fixed-width feature series.
//!
//! Pipeline: joint selection, visibility imputation, hip-centred torso
//! normalization, initial-frame trimming with a length cap, zero padding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{PoseSequence, ShotLabel};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("feature {feature} is below the visibility threshold in every frame")]
    AllMissingFeature { feature: String },
    #[error("median torso length {median} is degenerate")]
    DegenerateTorso { median: f64 },
    #[error("series of length {len} is too short to drop {drop} frames")]
    TooShort { len: usize, drop: usize },
    #[error("series of length {len} exceeds pad target {target}")]
    ExceedsTarget { len: usize, target: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Joint names with their (left, right) landmark indices, in feature order.
pub const JOINTS: [(&str, usize, usize); 7] = [
    ("shoulder", 11, 12),
    ("elbow", 13, 14),
    ("wrist", 15, 16),
    ("hip", 23, 24),
    ("knee", 25, 26),
    ("ankle", 27, 28),
    ("heel", 29, 30),
];

pub const FEATURE_COUNT: usize = JOINTS.len() * 4;

const SIDES: [&str; 2] = ["left", "right"];

/// Feature names, e.g. `left_wrist_x`.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for (joint, _, _) in JOINTS {
        for side in SIDES {
            for axis in ["x", "y"] {
                names.push(format!("{side}_{joint}_{axis}"));
            }
        }
    }
    names
}

pub fn feature_index(name: &str) -> Option<usize> {
    feature_names().iter().position(|n| n == name)
}

/// Landmark index feeding each feature, and whether it is the y coordinate.
fn feature_sources() -> [(usize, bool); FEATURE_COUNT] {
    let mut out = [(0, false); FEATURE_COUNT];
    let mut k = 0;
    for (_, left, right) in JOINTS {
        for lm in [left, right] {
            out[k] = (lm, false);
            out[k + 1] = (lm, true);
            k += 2;
        }
    }
    out
}

/// Clip metadata carried alongside the numeric series.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClipMeta {
    pub clip_id: String,
    pub folder_id: String,
    pub label: Option<ShotLabel>,
    pub over_number: Option<u32>,
    pub ball_in_over: Option<u8>,
}

impl From<&PoseSequence> for ClipMeta {
    fn from(seq: &PoseSequence) -> Self {
        ClipMeta {
            clip_id: seq.clip_id.clone(),
            folder_id: seq.folder_id.clone(),
            label: seq.label,
            over_number: seq.over_number,
            ball_in_over: seq.ball_in_over,
        }
    }
}

/// A `T × F` matrix, row-major in time.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSeries {
    values: Vec<f64>,
    steps: usize,
    features: usize,
    pub meta: ClipMeta,
}

impl FeatureSeries {
    pub fn new(values: Vec<f64>, steps: usize, features: usize, meta: ClipMeta) -> Result<Self, PreprocessError> {
        if steps == 0 || features == 0 || values.len() != steps * features {
            return Err(PreprocessError::Shape(format!(
                "{} values for {steps}x{features}",
                values.len()
            )));
        }
        Ok(FeatureSeries {
            values,
            steps,
            features,
            meta,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.features..(t + 1) * self.features]
    }

    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.values[t * self.features + f]
    }

    pub fn column(&self, f: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(move |t| self.get(t, f))
    }
}

/// Extracts x,y of the fourteen shoulder…heel landmarks. Depth is dropped.
pub fn select_joints(seq: &PoseSequence) -> FeatureSeries {
    let sources = feature_sources();
    let mut values = Vec::with_capacity(seq.len() * FEATURE_COUNT);
    for frame in seq.frames() {
        for &(lm, is_y) in &sources {
            let p = frame.landmarks[lm];
            values.push(if is_y { p.y } else { p.x });
        }
    }
    FeatureSeries {
        values,
        steps: seq.len(),
        features: FEATURE_COUNT,
        meta: ClipMeta::from(seq),
    }
}

/// Visibility of each selected feature, aligned with [`select_joints`].
pub fn joint_visibility(seq: &PoseSequence) -> Vec<f64> {
    let sources = feature_sources();
    seq.frames()
        .iter()
        .flat_map(|frame| sources.iter().map(move |&(lm, _)| frame.landmarks[lm].v))
        .collect()
}

/// Replaces entries whose visibility is below `v_min` by linear
/// interpolation in time. Leading and trailing gaps take the nearest
/// visible value.
pub fn impute_missing(
    series: &FeatureSeries,
    visibilities: &[f64],
    v_min: f64,
) -> Result<FeatureSeries, PreprocessError> {
    if visibilities.len() != series.values.len() {
        return Err(PreprocessError::Shape(format!(
            "{} visibilities for {} values",
            visibilities.len(),
            series.values.len()
        )));
    }
    let (steps, nf) = (series.steps, series.features);
    let mut out = series.clone();
    let names = feature_names();
    for f in 0..nf {
        let visible: Vec<usize> = (0..steps).filter(|&t| visibilities[t * nf + f] >= v_min).collect();
        if visible.is_empty() {
            return Err(PreprocessError::AllMissingFeature {
                feature: names.get(f).cloned().unwrap_or_else(|| f.to_string()),
            });
        }
        if visible.len() == steps {
            continue;
        }
        let val = |t: usize| series.values[t * nf + f];
        let first = visible[0];
        let last = *visible.last().unwrap();
        for t in 0..first {
            out.values[t * nf + f] = val(first);
        }
        for t in last + 1..steps {
            out.values[t * nf + f] = val(last);
        }
        for w in visible.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (va, vb) = (val(a), val(b));
            for t in a + 1..b {
                let frac = (t - a) as f64 / (b - a) as f64;
                out.values[t * nf + f] = va + (vb - va) * frac;
            }
        }
    }
    Ok(out)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

const MIN_TORSO: f64 = 1e-6;

/// Centres every frame on the mid-hip and divides by the clip-median
/// mid-shoulder↔mid-hip distance.
pub fn normalize(series: &FeatureSeries) -> Result<FeatureSeries, PreprocessError> {
    let names = feature_names();
    if series.features != FEATURE_COUNT {
        return Err(PreprocessError::Shape(format!(
            "normalize needs the {FEATURE_COUNT} standard features, got {}",
            series.features
        )));
    }
    let idx = |n: &str| names.iter().position(|x| x == n).expect("known feature");
    let (lhx, lhy, rhx, rhy) = (idx("left_hip_x"), idx("left_hip_y"), idx("right_hip_x"), idx("right_hip_y"));
    let (lsx, lsy, rsx, rsy) = (
        idx("left_shoulder_x"),
        idx("left_shoulder_y"),
        idx("right_shoulder_x"),
        idx("right_shoulder_y"),
    );

    let mut centres = Vec::with_capacity(series.steps);
    let mut torso = Vec::with_capacity(series.steps);
    for t in 0..series.steps {
        let r = series.row(t);
        let hip = (0.5 * (r[lhx] + r[rhx]), 0.5 * (r[lhy] + r[rhy]));
        let sh = (0.5 * (r[lsx] + r[rsx]), 0.5 * (r[lsy] + r[rsy]));
        centres.push(hip);
        torso.push((sh.0 - hip.0).hypot(sh.1 - hip.1));
    }
    let scale = median(&mut torso);
    if !(scale >= MIN_TORSO) {
        return Err(PreprocessError::DegenerateTorso { median: scale });
    }

    let mut out = series.clone();
    let nf = series.features;
    for (t, &(cx, cy)) in centres.iter().enumerate() {
        for f in 0..nf {
            let c = if f % 2 == 0 { cx } else { cy };
            let v = &mut out.values[t * nf + f];
            *v = (*v - c) / scale;
        }
    }
    Ok(out)
}

/// Drops the first `drop` steps, then keeps at most `cap`.
pub fn trim_cap(series: &FeatureSeries, drop: usize, cap: usize) -> Result<FeatureSeries, PreprocessError> {
    if series.steps <= drop {
        return Err(PreprocessError::TooShort {
            len: series.steps,
            drop,
        });
    }
    if cap == 0 {
        return Err(PreprocessError::Shape("cap must be positive".into()));
    }
    let keep = (series.steps - drop).min(cap);
    let nf = series.features;
    Ok(FeatureSeries {
        values: series.values[drop * nf..(drop + keep) * nf].to_vec(),
        steps: keep,
        features: nf,
        meta: series.meta.clone(),
    })
}

/// Zero-padded `L × F` matrix with the number of real rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedSeries {
    values: Vec<f64>,
    rows: usize,
    features: usize,
    valid_length: usize,
    pub meta: ClipMeta,
}

impl PaddedSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn valid_length(&self) -> usize {
        self.valid_length
    }

    pub fn label(&self) -> Option<ShotLabel> {
        self.meta.label
    }

    /// The real (unpadded) rows.
    pub fn unpad(&self) -> FeatureSeries {
        FeatureSeries {
            values: self.values[..self.valid_length * self.features].to_vec(),
            steps: self.valid_length,
            features: self.features,
            meta: self.meta.clone(),
        }
    }
}

pub fn pad_mask(series: &FeatureSeries, target: usize) -> Result<PaddedSeries, PreprocessError> {
    if series.steps > target {
        return Err(PreprocessError::ExceedsTarget {
            len: series.steps,
            target,
        });
    }
    let mut values = series.values.clone();
    values.resize(target * series.features, 0.0);
    Ok(PaddedSeries {
        values,
        rows: target,
        features: series.features,
        valid_length: series.steps,
        meta: series.meta.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub drop: usize,
    pub cap: usize,
    pub v_min: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            drop: 10,
            cap: 50,
            v_min: 0.5,
        }
    }
}

/// select → impute → normalize → trim/cap.
pub fn prepare(seq: &PoseSequence, cfg: &PreprocessConfig) -> Result<FeatureSeries, PreprocessError> {
    let raw = select_joints(seq);
    let vis = joint_visibility(seq);
    let filled = impute_missing(&raw, &vis, cfg.v_min)?;
    let normed = normalize(&filled)?;
    trim_cap(&normed, cfg.drop, cfg.cap)
}
