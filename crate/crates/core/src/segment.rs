//! Shot clip boundaries from per-frame person detections.
//!
//! A shot starts once some person stands in the batter region for
//! `dwell` consecutive frames. That person is then tracked frame to
//! frame by nearest center; the clip ends at the last frame whose
//! tracked center is still inside the horizontal batting band.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("line {line}: {detail}")]
    MalformedDetection { line: usize, detail: String },
    #[error("no batter found from frame {from}")]
    NoBatterFound { from: u64 },
    #[error("track lost after frame {last_seen}: no candidate for more than {gap_max} frames")]
    TrackLost { last_seen: u64, gap_max: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Person box in normalized image coordinates; `(x, y)` is the top-left
/// corner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(rename = "conf")]
    pub confidence: f64,
}

const BOX_EPS: f64 = 1e-9;

impl DetectionBox {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    fn validate(&self) -> Result<(), String> {
        let fields = [self.x, self.y, self.w, self.h, self.confidence];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err("non-finite field".into());
        }
        if self.x < 0.0 || self.y < 0.0 || self.w < 0.0 || self.h < 0.0 {
            return Err("negative box coordinate".into());
        }
        if self.x + self.w > 1.0 + BOX_EPS || self.y + self.h > 1.0 + BOX_EPS {
            return Err("box leaves the unit square".into());
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatterRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for BatterRegion {
    fn default() -> Self {
        BatterRegion {
            x_min: 0.40,
            x_max: 0.60,
            y_min: 0.55,
            y_max: 0.85,
        }
    }
}

impl BatterRegion {
    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }
}

/// Fixed-width horizontal band the tracked batter must stay inside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackBand {
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for TrackBand {
    fn default() -> Self {
        TrackBand { x_min: 0.30, x_max: 0.70 }
    }
}

impl TrackBand {
    pub fn contains(&self, (x, _): (f64, f64)) -> bool {
        (self.x_min..=self.x_max).contains(&x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub region: BatterRegion,
    pub band: TrackBand,
    pub dwell: usize,
    pub gap_max: usize,
    pub conf_min: f64,
    /// Largest center displacement between consecutive tracked frames.
    pub max_jump: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            region: BatterRegion::default(),
            band: TrackBand::default(),
            dwell: 5,
            gap_max: 5,
            conf_min: 0.5,
            max_jump: 0.15,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<(), SegmentError> {
        let r = &self.region;
        if !(r.x_min < r.x_max && r.y_min < r.y_max) {
            return Err(SegmentError::InvalidRegion("batter region min must be below max".into()));
        }
        if self.band.x_min >= self.band.x_max {
            return Err(SegmentError::InvalidRegion("track band min must be below max".into()));
        }
        if self.dwell == 0 {
            return Err(SegmentError::InvalidRegion("dwell must be at least one frame".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClipBounds {
    pub start_frame: u64,
    pub end_frame: u64,
}

/// Detections indexed densely by frame ordinal from 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionStream {
    frames: Vec<Vec<DetectionBox>>,
}

impl DetectionStream {
    pub fn from_frames(frames: Vec<Vec<DetectionBox>>) -> Self {
        DetectionStream { frames }
    }

    /// Groups boxes by frame; frames without boxes are empty.
    pub fn from_boxes(boxes: impl IntoIterator<Item = DetectionBox>) -> Self {
        let mut frames: Vec<Vec<DetectionBox>> = Vec::new();
        for b in boxes {
            let i = b.frame as usize;
            if frames.len() <= i {
                frames.resize_with(i + 1, Vec::new);
            }
            frames[i].push(b);
        }
        DetectionStream { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[DetectionBox] {
        &self.frames[i]
    }

    pub fn boxes(&self) -> impl Iterator<Item = &DetectionBox> {
        self.frames.iter().flatten()
    }

    fn candidates(&self, i: usize, conf_min: f64) -> impl Iterator<Item = &DetectionBox> {
        self.frames[i].iter().filter(move |b| b.confidence >= conf_min)
    }

    fn in_region(&self, i: usize, cfg: &SegmentConfig) -> bool {
        self.candidates(i, cfg.conf_min).any(|b| cfg.region.contains(b.center()))
    }

    /// One JSON object per line: `{"frame":..,"x":..,"y":..,"w":..,"h":..,"conf":..}`.
    pub fn parse_jsonl(text: &str) -> Result<Self, SegmentError> {
        let mut boxes = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            let b: DetectionBox = serde_json::from_str(line).map_err(|e| SegmentError::MalformedDetection {
                line: line_no,
                detail: e.to_string(),
            })?;
            b.validate()
                .map_err(|detail| SegmentError::MalformedDetection { line: line_no, detail })?;
            boxes.push(b);
        }
        Ok(Self::from_boxes(boxes))
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self, SegmentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SegmentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_jsonl(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for b in self.boxes() {
            out.push_str(&serde_json::to_string(b).expect("boxes serialize"));
            out.push('\n');
        }
        out
    }
}

/// First frame at or after `from` that opens a run of `dwell` frames each
/// holding a confident box centered in the batter region.
pub fn find_shot_start(stream: &DetectionStream, from: usize, cfg: &SegmentConfig) -> Result<usize, SegmentError> {
    let mut run = 0;
    for i in from..stream.len() {
        if stream.in_region(i, cfg) {
            run += 1;
            if run == cfg.dwell {
                return Ok(i + 1 - cfg.dwell);
            }
        } else {
            run = 0;
        }
    }
    Err(SegmentError::NoBatterFound { from: from as u64 })
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Follows the batter from `start` until the tracked center leaves the
/// band, returning the last frame still inside it.
pub fn track_until_exit(stream: &DetectionStream, start: usize, cfg: &SegmentConfig) -> Result<ClipBounds, SegmentError> {
    let target = cfg.region.center();
    let mut center = stream
        .candidates(start, cfg.conf_min)
        .map(DetectionBox::center)
        .filter(|&c| cfg.region.contains(c))
        .min_by(|&a, &b| dist2(a, target).total_cmp(&dist2(b, target)))
        .ok_or(SegmentError::NoBatterFound { from: start as u64 })?;
    let mut last_in = start;
    let mut gap = 0;
    let jump2 = cfg.max_jump * cfg.max_jump;
    for i in start + 1..stream.len() {
        let next = stream
            .candidates(i, cfg.conf_min)
            .map(DetectionBox::center)
            .filter(|&c| dist2(c, center) <= jump2)
            .min_by(|&a, &b| dist2(a, center).total_cmp(&dist2(b, center)));
        match next {
            None => {
                gap += 1;
                if gap > cfg.gap_max {
                    return Err(SegmentError::TrackLost {
                        last_seen: last_in as u64,
                        gap_max: cfg.gap_max,
                    });
                }
            }
            Some(c) if !cfg.band.contains(c) => break,
            Some(c) => {
                center = c;
                last_in = i;
                gap = 0;
            }
        }
    }
    Ok(ClipBounds {
        start_frame: start as u64,
        end_frame: last_in as u64,
    })
}

/// All shots in the stream, sorted and disjoint. A lost track abandons
/// that attempt and the search resumes after the gap.
pub fn extract_clips(stream: &DetectionStream, cfg: &SegmentConfig) -> Result<Vec<ClipBounds>, SegmentError> {
    cfg.validate()?;
    let mut clips = Vec::new();
    let mut from = 0;
    while from < stream.len() {
        let start = match find_shot_start(stream, from, cfg) {
            Ok(s) => s,
            Err(_) => break,
        };
        match track_until_exit(stream, start, cfg) {
            Ok(bounds) => {
                from = bounds.end_frame as usize + 1;
                clips.push(bounds);
            }
            Err(SegmentError::TrackLost { last_seen, .. }) => {
                log::warn!("track lost after frame {last_seen}; skipping attempt started at {start}");
                from = last_seen as usize + cfg.gap_max + 2;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(clips)
}

pub const CLIPS_CSV_HEADER: &str = "clip_id,start_frame,end_frame";

pub fn clips_to_csv(match_id: &str, clips: &[ClipBounds]) -> String {
    let mut out = String::from(CLIPS_CSV_HEADER);
    out.push('\n');
    for (i, c) in clips.iter().enumerate() {
        out.push_str(&format!("{match_id}_clip{:03},{},{}\n", i + 1, c.start_frame, c.end_frame));
    }
    out
}
