//! Dataset schema and loaders: pose CSV clips, the folder-per-match layout,
//! and ball-by-ball statistics tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::exec::{self, Execution};

pub const LANDMARK_COUNT: usize = 33;

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("{path}: malformed header: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },
    #[error("{path}: frame index not strictly increasing at data row {row}")]
    NonMonotonicFrames { path: PathBuf, row: usize },
    #[error("{path}: data row {row}, column {column}: value {value} out of range")]
    CoordinateOutOfRange {
        path: PathBuf,
        row: usize,
        column: String,
        value: f64,
    },
    #[error("{path}: clip has no frames")]
    EmptyClip { path: PathBuf },
    #[error("{path}: data row {row}: {detail}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        detail: String,
    },
    #[error("folder {folder} contains no usable clips")]
    EmptyFolder { folder: String },
    #[error("{path}: data row {row}: unknown field region {value:?}")]
    UnknownRegion {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}: data row {row}: negative runs {runs}")]
    NegativeRuns { path: PathBuf, row: usize, runs: i64 },
    #[error("invalid pose sequence {clip_id}: {detail}")]
    InvalidSequence { clip_id: String, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PoseError + '_ {
    move |source| PoseError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, row: usize, e: csv::Error) -> PoseError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => PoseError::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => PoseError::MalformedRow {
            path: path.to_path_buf(),
            row,
            detail: format!("{kind:?}"),
        },
    }
}

/// One pose-estimator landmark: normalized image coordinates, relative
/// depth and visibility.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseFrame {
    pub frame_index: u64,
    pub landmarks: [Landmark; LANDMARK_COUNT],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShotLabel {
    Low,
    High,
}

impl ShotLabel {
    /// Class index used by the networks: Low = 0, High = 1.
    pub fn index(self) -> usize {
        match self {
            ShotLabel::Low => 0,
            ShotLabel::High => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 1 {
            ShotLabel::High
        } else {
            ShotLabel::Low
        }
    }

    /// Thresholds a High probability at 0.5.
    pub fn from_probability(p: f64) -> Self {
        if p >= 0.5 {
            ShotLabel::High
        } else {
            ShotLabel::Low
        }
    }

    pub fn is_high(self) -> bool {
        self == ShotLabel::High
    }

    pub fn flipped(self) -> Self {
        match self {
            ShotLabel::Low => ShotLabel::High,
            ShotLabel::High => ShotLabel::Low,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ShotLabel::Low => "low",
            ShotLabel::High => "high",
        }
    }
}

impl fmt::Display for ShotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShotLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "1" => Ok(ShotLabel::High),
            "low" | "0" => Ok(ShotLabel::Low),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// One shot clip.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence {
    frames: Vec<PoseFrame>,
    pub clip_id: String,
    pub folder_id: String,
    pub label: Option<ShotLabel>,
    pub over_number: Option<u32>,
    pub ball_in_over: Option<u8>,
}

impl PoseSequence {
    /// Builds a sequence after checking it is non-empty with strictly
    /// increasing frame indices and in-range coordinates.
    pub fn new(frames: Vec<PoseFrame>, clip_id: impl Into<String>) -> Result<Self, PoseError> {
        let clip_id = clip_id.into();
        let invalid = |detail: String| PoseError::InvalidSequence {
            clip_id: clip_id.clone(),
            detail,
        };
        if frames.is_empty() {
            return Err(invalid("no frames".into()));
        }
        for (i, w) in frames.windows(2).enumerate() {
            if w[1].frame_index <= w[0].frame_index {
                return Err(invalid(format!("frame index not increasing at {}", i + 1)));
            }
        }
        for frame in &frames {
            if let Some(detail) = landmark_violation(&frame.landmarks) {
                return Err(invalid(format!("frame {}: {detail}", frame.frame_index)));
            }
        }
        let (over_number, ball_in_over) = parse_delivery(&clip_id);
        Ok(PoseSequence {
            frames,
            clip_id,
            folder_id: String::new(),
            label: None,
            over_number,
            ball_in_over,
        })
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn with_label(mut self, label: ShotLabel) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_folder(mut self, folder: impl Into<String>) -> Self {
        self.folder_id = folder.into();
        self
    }
}

fn landmark_violation(lms: &[Landmark; LANDMARK_COUNT]) -> Option<String> {
    for (j, lm) in lms.iter().enumerate() {
        if !(0.0..=1.0).contains(&lm.x) || !(0.0..=1.0).contains(&lm.y) {
            return Some(format!("landmark {j} outside unit square"));
        }
        if !(0.0..=1.0).contains(&lm.v) {
            return Some(format!("landmark {j} visibility out of range"));
        }
        if !lm.z.is_finite() {
            return Some(format!("landmark {j} depth not finite"));
        }
    }
    None
}

/// Reads `_over<O>` or `_over<O>.<B>` from a clip id.
pub fn parse_delivery(clip_id: &str) -> (Option<u32>, Option<u8>) {
    let Some(pos) = clip_id.rfind("_over") else {
        return (None, None);
    };
    let rest = &clip_id[pos + "_over".len()..];
    let over_digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    let Ok(over) = over_digits.parse::<u32>() else {
        return (None, None);
    };
    let tail = &rest[over_digits.len()..];
    let ball = tail.strip_prefix('.').and_then(|b| {
        let digits: String = b.chars().take_while(|c| c.is_ascii_digit()).collect();
        digits.parse::<u8>().ok()
    });
    (Some(over), ball)
}

/// Column names of the pose CSV, in order.
pub fn pose_csv_header() -> Vec<String> {
    let mut cols = Vec::with_capacity(1 + 4 * LANDMARK_COUNT);
    cols.push("frame".to_string());
    for j in 0..LANDMARK_COUNT {
        for c in ["x", "y", "z", "v"] {
            cols.push(format!("{c}{j}"));
        }
    }
    cols
}

pub fn load_pose_csv(path: impl AsRef<Path>) -> Result<PoseSequence, PoseError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_pose_csv(path, &text)
}

fn parse_pose_csv(path: &Path, text: &str) -> Result<PoseSequence, PoseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let expected = pose_csv_header();
    let header = rdr.headers().map_err(|e| csv_err(path, 0, e))?.clone();
    if header.len() != expected.len() {
        return Err(PoseError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("expected {} columns, found {}", expected.len(), header.len()),
        });
    }
    if let Some((i, (got, want))) = header
        .iter()
        .zip(&expected)
        .enumerate()
        .find(|(_, (g, w))| g.trim() != w.as_str())
    {
        return Err(PoseError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("column {i} is {got:?}, expected {want:?}"),
        });
    }

    let mut frames: Vec<PoseFrame> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, row, e))?;
        if record.len() != expected.len() {
            return Err(PoseError::MalformedRow {
                path: path.to_path_buf(),
                row,
                detail: format!("{} fields", record.len()),
            });
        }
        let frame_index: u64 =
            record[0]
                .trim()
                .parse()
                .map_err(|_| PoseError::MalformedRow {
                    path: path.to_path_buf(),
                    row,
                    detail: format!("bad frame index {:?}", &record[0]),
                })?;
        if let Some(prev) = frames.last() {
            if frame_index <= prev.frame_index {
                return Err(PoseError::NonMonotonicFrames {
                    path: path.to_path_buf(),
                    row,
                });
            }
        }
        let mut landmarks = [Landmark::default(); LANDMARK_COUNT];
        for (j, lm) in landmarks.iter_mut().enumerate() {
            let mut vals = [0.0; 4];
            for (k, val) in vals.iter_mut().enumerate() {
                let col = 1 + 4 * j + k;
                let raw = record[col].trim();
                let parsed: f64 = raw.parse().map_err(|_| PoseError::MalformedRow {
                    path: path.to_path_buf(),
                    row,
                    detail: format!("column {} not a number: {raw:?}", expected[col]),
                })?;
                let ok = match k {
                    2 => parsed.is_finite(),
                    _ => (0.0..=1.0).contains(&parsed),
                };
                if !ok {
                    return Err(PoseError::CoordinateOutOfRange {
                        path: path.to_path_buf(),
                        row,
                        column: expected[col].clone(),
                        value: parsed,
                    });
                }
                *val = parsed;
            }
            *lm = Landmark {
                x: vals[0],
                y: vals[1],
                z: vals[2],
                v: vals[3],
            };
        }
        frames.push(PoseFrame {
            frame_index,
            landmarks,
        });
    }
    if frames.is_empty() {
        return Err(PoseError::EmptyClip {
            path: path.to_path_buf(),
        });
    }
    let clip_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (over_number, ball_in_over) = parse_delivery(&clip_id);
    Ok(PoseSequence {
        frames,
        clip_id,
        folder_id: String::new(),
        label: None,
        over_number,
        ball_in_over,
    })
}

/// Writes a sequence in the pose CSV schema. Values use the shortest
/// round-trip decimal form, so loading the file back is bit-exact.
pub fn write_pose_csv(path: impl AsRef<Path>, seq: &PoseSequence) -> Result<(), PoseError> {
    let path = path.as_ref();
    let mut out = String::with_capacity(seq.len() * 1200);
    out.push_str(&pose_csv_header().join(","));
    out.push('\n');
    for frame in seq.frames() {
        out.push_str(&frame.frame_index.to_string());
        for lm in &frame.landmarks {
            for v in [lm.x, lm.y, lm.z, lm.v] {
                out.push(',');
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(out.as_bytes()).map_err(io_err(path))
}

/// Writes `root/<folder>/{high,low}/<clip_id>.csv`, the layout
/// [`load_dataset`] reads.
pub fn write_dataset(root: impl AsRef<Path>, dataset: &FoldedDataset) -> Result<(), PoseError> {
    let root = root.as_ref();
    for (folder, seqs) in dataset.folders() {
        for label in [ShotLabel::High, ShotLabel::Low] {
            let dir = root.join(folder).join(label.as_str());
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        for seq in seqs {
            let label = seq.label.expect("dataset clips are labeled");
            write_pose_csv(root.join(folder).join(label.as_str()).join(format!("{}.csv", seq.clip_id)), seq)?;
        }
    }
    Ok(())
}

/// Labeled clips grouped by match folder. Folder order is lexicographic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FoldedDataset {
    folders: BTreeMap<String, Vec<PoseSequence>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolderCount {
    pub folder: String,
    pub high: usize,
    pub low: usize,
}

impl FoldedDataset {
    /// Every sequence must carry a label; its `folder_id` is overwritten.
    pub fn from_folders(
        folders: impl IntoIterator<Item = (String, Vec<PoseSequence>)>,
    ) -> Result<Self, PoseError> {
        let mut map = BTreeMap::new();
        for (id, mut seqs) in folders {
            if seqs.is_empty() {
                return Err(PoseError::EmptyFolder { folder: id });
            }
            for s in &mut seqs {
                if s.label.is_none() {
                    return Err(PoseError::InvalidSequence {
                        clip_id: s.clip_id.clone(),
                        detail: "unlabeled clip in dataset".into(),
                    });
                }
                s.folder_id = id.clone();
            }
            if map.insert(id.clone(), seqs).is_some() {
                return Err(PoseError::InvalidSequence {
                    clip_id: id,
                    detail: "duplicate folder id".into(),
                });
            }
        }
        Ok(FoldedDataset { folders: map })
    }

    pub fn folder_ids(&self) -> impl Iterator<Item = &str> {
        self.folders.keys().map(String::as_str)
    }

    pub fn folder(&self, id: &str) -> Option<&[PoseSequence]> {
        self.folders.get(id).map(Vec::as_slice)
    }

    pub fn folders(&self) -> impl Iterator<Item = (&str, &[PoseSequence])> {
        self.folders.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn num_folders(&self) -> usize {
        self.folders.len()
    }

    pub fn len(&self) -> usize {
        self.folders.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> Vec<FolderCount> {
        self.folders
            .iter()
            .map(|(folder, seqs)| {
                let high = seqs
                    .iter()
                    .filter(|s| s.label == Some(ShotLabel::High))
                    .count();
                FolderCount {
                    folder: folder.clone(),
                    high,
                    low: seqs.len() - high,
                }
            })
            .collect()
    }

    /// Copy with every label in `folder` replaced by `f(label)`.
    pub fn map_folder_labels(&self, folder: &str, f: impl Fn(ShotLabel) -> ShotLabel) -> Self {
        let mut out = self.clone();
        if let Some(seqs) = out.folders.get_mut(folder) {
            for s in seqs {
                s.label = s.label.map(&f);
            }
        }
        out
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, PoseError> {
    let mut entries = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort();
    Ok(entries)
}

/// Loads `root/<folder>/{high,low}/*.csv`. Any unreadable clip fails the
/// whole load with that file's path in the error.
pub fn load_dataset(root: impl AsRef<Path>, exec: Execution) -> Result<FoldedDataset, PoseError> {
    let root = root.as_ref();
    let mut jobs: Vec<(String, ShotLabel, PathBuf)> = Vec::new();
    let mut folder_ids = Vec::new();
    for folder_path in sorted_entries(root)? {
        if !folder_path.is_dir() {
            continue;
        }
        let folder = folder_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        folder_ids.push(folder.clone());
        for (sub, label) in [("high", ShotLabel::High), ("low", ShotLabel::Low)] {
            let dir = folder_path.join(sub);
            if !dir.is_dir() {
                continue;
            }
            for file in sorted_entries(&dir)? {
                if file.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                    jobs.push((folder.clone(), label, file));
                }
            }
        }
    }

    let loaded = exec::map(exec, &jobs, |(_, label, path)| {
        load_pose_csv(path).map(|s| s.with_label(*label))
    });

    let mut folders: BTreeMap<String, Vec<PoseSequence>> =
        folder_ids.into_iter().map(|f| (f, Vec::new())).collect();
    for ((folder, _, _), seq) in jobs.iter().zip(loaded) {
        let seq = seq?;
        folders
            .get_mut(folder)
            .expect("folder registered above")
            .push(seq.with_folder(folder.clone()));
    }
    if let Some((folder, _)) = folders.iter().find(|(_, v)| v.is_empty()) {
        return Err(PoseError::EmptyFolder {
            folder: folder.clone(),
        });
    }
    for (folder, seqs) in &folders {
        let high = seqs.iter().filter(|s| s.label == Some(ShotLabel::High)).count();
        log::info!("folder {folder}: {high} high, {} low", seqs.len() - high);
    }
    Ok(FoldedDataset { folders })
}

/// The eight fielding regions. Declaration order is the alphabetical
/// table order used in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldRegion {
    Cover,
    FineLeg,
    MidOff,
    MidOn,
    MidWicket,
    Point,
    SquareLeg,
    ThirdMan,
}

impl FieldRegion {
    pub const ALL: [FieldRegion; 8] = [
        FieldRegion::Cover,
        FieldRegion::FineLeg,
        FieldRegion::MidOff,
        FieldRegion::MidOn,
        FieldRegion::MidWicket,
        FieldRegion::Point,
        FieldRegion::SquareLeg,
        FieldRegion::ThirdMan,
    ];

    /// Clockwise from the top of a wagon wheel.
    pub const WHEEL_ORDER: [FieldRegion; 8] = [
        FieldRegion::ThirdMan,
        FieldRegion::Point,
        FieldRegion::Cover,
        FieldRegion::MidOff,
        FieldRegion::MidOn,
        FieldRegion::MidWicket,
        FieldRegion::SquareLeg,
        FieldRegion::FineLeg,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldRegion::Cover => "cover",
            FieldRegion::FineLeg => "fine leg",
            FieldRegion::MidOff => "mid off",
            FieldRegion::MidOn => "mid on",
            FieldRegion::MidWicket => "mid wicket",
            FieldRegion::Point => "point",
            FieldRegion::SquareLeg => "square leg",
            FieldRegion::ThirdMan => "third man",
        }
    }
}

impl fmt::Display for FieldRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FieldRegion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase();
        FieldRegion::ALL
            .into_iter()
            .find(|r| r.name() == norm)
            .ok_or_else(|| format!("unknown region {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallRecord {
    pub match_id: String,
    pub over_number: u32,
    pub ball_in_over: u8,
    pub batter: String,
    pub bowler: String,
    pub runs: u32,
    pub region: FieldRegion,
}

pub const BALL_CSV_HEADER: [&str; 7] = ["match_id", "over", "ball", "batter", "bowler", "runs", "region"];

pub fn load_ball_records(path: impl AsRef<Path>) -> Result<Vec<BallRecord>, PoseError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_ball_records(path, &text)
}

pub fn parse_ball_records(path: &Path, text: &str) -> Result<Vec<BallRecord>, PoseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_err(path, 0, e))?.clone();
    if header.iter().ne(BALL_CSV_HEADER.iter().copied()) {
        return Err(PoseError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("expected {}", BALL_CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, row, e))?;
        let malformed = |detail: String| PoseError::MalformedRow {
            path: path.to_path_buf(),
            row,
            detail,
        };
        if record.len() != BALL_CSV_HEADER.len() {
            return Err(malformed(format!("{} fields", record.len())));
        }
        let over_number: u32 = record[1]
            .parse()
            .map_err(|_| malformed(format!("bad over {:?}", &record[1])))?;
        let ball_in_over: u8 = record[2]
            .parse()
            .ok()
            .filter(|b| (1..=6).contains(b))
            .ok_or_else(|| malformed(format!("bad ball {:?}", &record[2])))?;
        let runs: i64 = record[5]
            .parse()
            .map_err(|_| malformed(format!("bad runs {:?}", &record[5])))?;
        if runs < 0 {
            return Err(PoseError::NegativeRuns {
                path: path.to_path_buf(),
                row,
                runs,
            });
        }
        let region = record[6].parse().map_err(|_| PoseError::UnknownRegion {
            path: path.to_path_buf(),
            row,
            value: record[6].to_string(),
        })?;
        out.push(BallRecord {
            match_id: record[0].to_string(),
            over_number,
            ball_in_over,
            batter: record[3].to_string(),
            bowler: record[4].to_string(),
            runs: u32::try_from(runs).map_err(|_| malformed("runs overflow".into()))?,
            region,
        });
    }
    Ok(out)
}

pub fn write_ball_records(path: impl AsRef<Path>, records: &[BallRecord]) -> Result<(), PoseError> {
    let path = path.as_ref();
    let mut out = BALL_CSV_HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.match_id, r.over_number, r.ball_in_over, r.batter, r.bowler, r.runs, r.region
        ));
    }
    fs::write(path, out).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(idx: u64, fill: f64) -> PoseFrame {
        let mut landmarks = [Landmark::default(); LANDMARK_COUNT];
        for (j, lm) in landmarks.iter_mut().enumerate() {
            *lm = Landmark {
                x: fill,
                y: (j as f64) / 40.0,
                z: -0.25 * j as f64,
                v: 0.9,
            };
        }
        PoseFrame {
            frame_index: idx,
            landmarks,
        }
    }

    fn csv_text(frames: &[(u64, f64)]) -> String {
        let mut s = pose_csv_header().join(",");
        s.push('\n');
        for (idx, fill) in frames {
            s.push_str(&idx.to_string());
            for lm in frame(*idx, *fill).landmarks {
                s.push_str(&format!(",{},{},{},{}", lm.x, lm.y, lm.z, lm.v));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn loads_fifty_rows() {
        let rows: Vec<(u64, f64)> = (0..50).map(|i| (i, 0.5)).collect();
        let seq = parse_pose_csv(Path::new("clip_a.csv"), &csv_text(&rows)).unwrap();
        assert_eq!(seq.len(), 50);
        assert_eq!(seq.clip_id, "clip_a");
        assert_eq!(seq.label, None);
    }

    #[test]
    fn repeated_frame_index_is_rejected() {
        let text = csv_text(&[(0, 0.1), (1, 0.1), (1, 0.1), (2, 0.1)]);
        let err = parse_pose_csv(Path::new("x.csv"), &text).unwrap_err();
        assert!(matches!(err, PoseError::NonMonotonicFrames { row: 2, .. }), "{err}");
    }

    #[test]
    fn header_and_range_errors() {
        let err = parse_pose_csv(Path::new("x.csv"), "frame,x0\n0,0.1\n").unwrap_err();
        assert!(matches!(err, PoseError::MalformedHeader { .. }));

        let text = csv_text(&[(0, 1.5)]);
        let err = parse_pose_csv(Path::new("x.csv"), &text).unwrap_err();
        assert!(matches!(err, PoseError::CoordinateOutOfRange { ref column, .. } if column == "x0"));

        let text = format!("{}\n", pose_csv_header().join(","));
        let err = parse_pose_csv(Path::new("x.csv"), &text).unwrap_err();
        assert!(matches!(err, PoseError::EmptyClip { .. }));
    }

    #[test]
    fn write_then_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut frames = vec![frame(3, 0.1), frame(4, 0.2), frame(9, 0.3)];
        frames[1].landmarks[15].x = 0.1 + 0.2;
        frames[2].landmarks[0].z = -1.0 / 3.0;
        frames[0].landmarks[7].v = f64::MIN_POSITIVE;
        let seq = PoseSequence::new(frames, "m1_clip7_over12.3").unwrap();
        let path = dir.path().join("m1_clip7_over12.3.csv");
        write_pose_csv(&path, &seq).unwrap();
        let back = load_pose_csv(&path).unwrap();
        assert_eq!(back, seq);
        assert_eq!(back.over_number, Some(12));
        assert_eq!(back.ball_in_over, Some(3));
    }

    #[test]
    fn delivery_suffix_parsing() {
        assert_eq!(parse_delivery("clip_over7"), (Some(7), None));
        assert_eq!(parse_delivery("clip_over7.2"), (Some(7), Some(2)));
        assert_eq!(parse_delivery("clip7"), (None, None));
        assert_eq!(parse_delivery("clip_overx"), (None, None));
    }

    #[test]
    fn ball_record_mapping() {
        let text = "match_id,over,ball,batter,bowler,runs,region\nm1,12,3,Kohli,Rabada,4,cover\nm1,12,4,Kohli,Rabada,0,Fine Leg\n";
        let recs = parse_ball_records(Path::new("b.csv"), text).unwrap();
        assert_eq!(
            recs[0],
            BallRecord {
                match_id: "m1".into(),
                over_number: 12,
                ball_in_over: 3,
                batter: "Kohli".into(),
                bowler: "Rabada".into(),
                runs: 4,
                region: FieldRegion::Cover,
            }
        );
        assert_eq!(recs[1].region, FieldRegion::FineLeg);
    }

    #[test]
    fn ball_record_errors() {
        let head = "match_id,over,ball,batter,bowler,runs,region\n";
        let err = parse_ball_records(Path::new("b.csv"), &format!("{head}m1,1,1,a,b,4,Cover Drive\n"))
            .unwrap_err();
        assert!(matches!(err, PoseError::UnknownRegion { .. }));
        let err =
            parse_ball_records(Path::new("b.csv"), &format!("{head}m1,1,1,a,b,-1,cover\n")).unwrap_err();
        assert!(matches!(err, PoseError::NegativeRuns { runs: -1, .. }));
        let err =
            parse_ball_records(Path::new("b.csv"), &format!("{head}m1,1,9,a,b,1,cover\n")).unwrap_err();
        assert!(matches!(err, PoseError::MalformedRow { .. }));
    }

    #[test]
    fn region_names_round_trip() {
        for r in FieldRegion::ALL {
            assert_eq!(r.name().parse::<FieldRegion>().unwrap(), r);
        }
        let mut wheel = FieldRegion::WHEEL_ORDER.to_vec();
        wheel.sort();
        assert_eq!(wheel, FieldRegion::ALL.to_vec());
    }
}
