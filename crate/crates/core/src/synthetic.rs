//! Seeded generators for pose datasets and detection streams with known
//! ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::pose::{BallRecord, FieldRegion, FoldedDataset, Landmark, PoseFrame, PoseSequence, ShotLabel, LANDMARK_COUNT};
use crate::seed;
use crate::segment::{ClipBounds, DetectionBox, DetectionStream};

// Standing figure in 1/256 image units. Dyadic coordinates keep hip
// centering and torso scaling exact under dyadic translations.
const BASE_POSE: [(i32, i32); LANDMARK_COUNT] = [
    (128, 72),  // nose
    (124, 68),
    (122, 68),
    (120, 68),
    (132, 68),
    (134, 68),
    (136, 68),
    (116, 72),
    (140, 72),
    (124, 80),
    (132, 80),
    (112, 100), // left shoulder
    (144, 100),
    (108, 124), // left elbow
    (148, 124),
    (112, 144), // left wrist
    (144, 144),
    (110, 148),
    (146, 148),
    (112, 150),
    (144, 150),
    (114, 148),
    (142, 148),
    (120, 148), // left hip
    (136, 148),
    (120, 180), // left knee
    (136, 180),
    (120, 208), // left ankle
    (136, 208),
    (116, 212), // left heel
    (140, 212),
    (124, 214),
    (132, 214),
];

/// Relative swing of each landmark; arms move most.
fn joint_weight(j: usize) -> f64 {
    match j {
        15..=22 => 1.0,
        13 | 14 => 0.6,
        11 | 12 => 0.2,
        25 | 26 => 0.3,
        27..=32 => 0.2,
        23 | 24 => 0.1,
        _ => 0.15,
    }
}

const VISIBILITY: f64 = 0.9375;

fn base_landmarks(dx: f64, dy: f64, scale: f64) -> [Landmark; LANDMARK_COUNT] {
    let (cx, cy) = (0.5, 0.5);
    std::array::from_fn(|j| {
        let (x, y) = BASE_POSE[j];
        Landmark {
            x: cx + (x as f64 / 256.0 - cx) * scale + dx,
            y: cy + (y as f64 / 256.0 - cy) * scale + dy,
            z: 0.0,
            v: VISIBILITY,
        }
    })
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Oscillating swing; returns the displacement of a unit-weight joint.
#[derive(Clone, Copy, Debug)]
struct Swing {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

impl Swing {
    fn random(amplitude: f64, rng: &mut ChaCha8Rng) -> Self {
        let period = rng.random_range(12.0..24.0);
        Swing {
            amplitude,
            omega: std::f64::consts::TAU / period,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        }
    }

    fn at(&self, t: f64) -> (f64, f64) {
        let a = self.omega * t + self.phase;
        (self.amplitude * a.sin(), 0.5 * self.amplitude * a.cos())
    }
}

fn clip_id(folder: &str, label: ShotLabel, i: usize, k: usize) -> String {
    format!("{folder}_{}{i:02}_over{}.{}", label.as_str(), k / 6, k % 6 + 1)
}

fn folder_name(i: usize) -> String {
    format!("m{:02}", i + 1)
}

/// Dataset whose classes differ only in motion amplitude.
#[derive(Clone, Debug)]
pub struct AmplitudeSpec {
    pub folders: usize,
    pub clips_per_class: usize,
    pub frames: usize,
    /// Peak swing of a unit-weight joint, in image fractions.
    pub low_amplitude: f64,
    pub high_amplitude: f64,
    /// Per-clip multiplicative amplitude spread, uniform in `1 ± jitter`.
    pub jitter: f64,
    /// Standard deviation of per-coordinate Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for AmplitudeSpec {
    fn default() -> Self {
        AmplitudeSpec {
            folders: 11,
            clips_per_class: 6,
            frames: 70,
            low_amplitude: 0.04,
            high_amplitude: 0.08,
            jitter: 0.2,
            noise: 0.001,
            seed: 0,
        }
    }
}

pub fn amplitude_dataset(spec: &AmplitudeSpec) -> FoldedDataset {
    let noise = Normal::new(0.0, spec.noise).expect("noise is finite and non-negative");
    let folders = (0..spec.folders).map(|f| {
        let folder = folder_name(f);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &["amplitude", &folder]));
        let mut clips = Vec::with_capacity(2 * spec.clips_per_class);
        for k in 0..2 * spec.clips_per_class {
            let label = if k % 2 == 0 { ShotLabel::High } else { ShotLabel::Low };
            let base_amp = match label {
                ShotLabel::High => spec.high_amplitude,
                ShotLabel::Low => spec.low_amplitude,
            };
            let amp = base_amp * rng.random_range(1.0 - spec.jitter..=1.0 + spec.jitter);
            let swing = Swing::random(amp, &mut rng);
            let scale = rng.random_range(0.8..1.2);
            let (dx, dy) = (rng.random_range(-0.05..0.05), rng.random_range(-0.04..0.04));
            let frames = (0..spec.frames)
                .map(|t| {
                    let mut lms = base_landmarks(dx, dy, scale);
                    let (sx, sy) = swing.at(t as f64);
                    for (j, lm) in lms.iter_mut().enumerate() {
                        let w = joint_weight(j) * scale;
                        lm.x = clamp_unit(lm.x + w * sx + noise.sample(&mut rng));
                        lm.y = clamp_unit(lm.y + w * sy + noise.sample(&mut rng));
                    }
                    PoseFrame {
                        frame_index: t as u64,
                        landmarks: lms,
                    }
                })
                .collect();
            let seq = PoseSequence::new(frames, clip_id(&folder, label, k / 2, k))
                .expect("generated poses lie in the unit square")
                .with_label(label);
            clips.push(seq);
        }
        (folder, clips)
    });
    FoldedDataset::from_folders(folders.collect::<Vec<_>>()).expect("generated folders are non-empty and labeled")
}

/// Dataset that is static except inside a window of frames, where the
/// classes swing with different amplitudes.
#[derive(Clone, Debug)]
pub struct PlantedSpec {
    pub folders: usize,
    pub clips_per_class: usize,
    pub frames: usize,
    /// Frames dropped by preprocessing; the window is offset by this.
    pub lead_in: usize,
    /// Window start and end (inclusive), counted after the lead-in.
    pub window: (usize, usize),
    pub low_amplitude: f64,
    pub high_amplitude: f64,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            folders: 11,
            clips_per_class: 6,
            frames: 70,
            lead_in: 10,
            window: (20, 40),
            low_amplitude: 0.03,
            high_amplitude: 0.09,
            jitter: 0.2,
            seed: 0,
        }
    }
}

pub fn planted_dataset(spec: &PlantedSpec) -> FoldedDataset {
    let (w0, w1) = (spec.lead_in + spec.window.0, spec.lead_in + spec.window.1);
    let folders = (0..spec.folders).map(|f| {
        let folder = folder_name(f);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &["planted", &folder]));
        let mut clips = Vec::with_capacity(2 * spec.clips_per_class);
        for k in 0..2 * spec.clips_per_class {
            let label = if k % 2 == 0 { ShotLabel::High } else { ShotLabel::Low };
            let base_amp = match label {
                ShotLabel::High => spec.high_amplitude,
                ShotLabel::Low => spec.low_amplitude,
            };
            let amp = base_amp * rng.random_range(1.0 - spec.jitter..=1.0 + spec.jitter);
            let swing = Swing::random(amp, &mut rng);
            // multiples of 1/128 keep the static pose exact after centering
            let dx = rng.random_range(-8i32..=8) as f64 / 128.0;
            let dy = rng.random_range(-4i32..=4) as f64 / 128.0;
            let frames = (0..spec.frames)
                .map(|t| {
                    let mut lms = base_landmarks(dx, dy, 1.0);
                    if (w0..=w1).contains(&t) {
                        let (sx, sy) = swing.at(t as f64);
                        for (j, lm) in lms.iter_mut().enumerate() {
                            let w = joint_weight(j);
                            lm.x = clamp_unit(lm.x + w * sx);
                            lm.y = clamp_unit(lm.y + w * sy);
                        }
                    }
                    PoseFrame {
                        frame_index: t as u64,
                        landmarks: lms,
                    }
                })
                .collect();
            let seq = PoseSequence::new(frames, clip_id(&folder, label, k / 2, k))
                .expect("generated poses lie in the unit square")
                .with_label(label);
            clips.push(seq);
        }
        (folder, clips)
    });
    FoldedDataset::from_folders(folders.collect::<Vec<_>>()).expect("generated folders are non-empty and labeled")
}

/// Detection stream with planted batter shots and their true bounds.
#[derive(Clone, Debug)]
pub struct PlantedStream {
    pub stream: DetectionStream,
    pub truth: Vec<ClipBounds>,
}

/// Ball-by-ball statistics aligned with the generated clip ids: delivery
/// `k` of match `mNN` is over `k / 6`, ball `k % 6 + 1`, and even `k`
/// (the High clips) score boundary-style runs.
#[derive(Clone, Debug)]
pub struct RecordsSpec {
    pub matches: usize,
    pub balls_per_match: usize,
    pub seed: u64,
}

impl Default for RecordsSpec {
    fn default() -> Self {
        RecordsSpec {
            matches: 11,
            balls_per_match: 12,
            seed: 0,
        }
    }
}

const BOWLERS: [&str; 4] = ["bowler_a", "bowler_b", "bowler_c", "bowler_d"];

pub fn ball_records(spec: &RecordsSpec) -> Vec<BallRecord> {
    let mut out = Vec::with_capacity(spec.matches * spec.balls_per_match);
    for m in 0..spec.matches {
        let match_id = folder_name(m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &["records", &match_id]));
        for k in 0..spec.balls_per_match {
            let over = (k / 6) as u32;
            let runs = if k % 2 == 0 {
                [2, 3, 4, 4, 6][rng.random_range(0..5)]
            } else {
                [0, 0, 1, 1, 2][rng.random_range(0..5)]
            };
            // leg-side bias for attacking strokes
            let region = if runs >= 3 && rng.random_bool(0.4) {
                [FieldRegion::MidWicket, FieldRegion::SquareLeg][rng.random_range(0..2)]
            } else {
                FieldRegion::ALL[rng.random_range(0..8)]
            };
            out.push(BallRecord {
                match_id: match_id.clone(),
                over_number: over,
                ball_in_over: (k % 6 + 1) as u8,
                batter: "batter".into(),
                bowler: BOWLERS[(m + over as usize) % BOWLERS.len()].into(),
                runs,
                region,
            });
        }
    }
    out
}

/// Geometry the stream generator plants shots against. Must agree with
/// the segmentation config the stream is checked with.
#[derive(Clone, Copy, Debug)]
pub struct StreamSpec {
    pub shots: usize,
    pub dwell: usize,
    pub gap_max: usize,
    pub conf_min: f64,
    /// Number of always-present fielders outside the batting band.
    pub fielders: usize,
    /// Low-confidence distractor boxes per frame, placed anywhere.
    pub ghosts: usize,
    pub seed: u64,
}

impl Default for StreamSpec {
    fn default() -> Self {
        StreamSpec {
            shots: 2,
            dwell: 5,
            gap_max: 5,
            conf_min: 0.5,
            fielders: 2,
            ghosts: 1,
            seed: 0,
        }
    }
}

const BOX_W: f64 = 0.06;
const BOX_H: f64 = 0.2;

fn centered_box(frame: u64, cx: f64, cy: f64, confidence: f64) -> DetectionBox {
    DetectionBox {
        frame,
        x: cx - BOX_W / 2.0,
        y: cy - BOX_H / 2.0,
        w: BOX_W,
        h: BOX_H,
        confidence,
    }
}

/// Plants shots in the default batter region and band: the batter
/// appears inside the region, holds still (with short detection gaps),
/// then moves sideways until its center leaves the band.
pub fn planted_stream(spec: &StreamSpec) -> PlantedStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &["stream"]));
    let mut batter: Vec<Option<(f64, f64)>> = Vec::new();
    let mut truth = Vec::with_capacity(spec.shots);

    let idle = |rng: &mut ChaCha8Rng, batter: &mut Vec<Option<(f64, f64)>>| {
        for _ in 0..rng.random_range(1..30) {
            batter.push(None);
        }
    };
    idle(&mut rng, &mut batter);
    for _ in 0..spec.shots {
        let start = batter.len();
        let (mut cx, cy) = (rng.random_range(0.45..0.55), rng.random_range(0.62..0.78));
        let hold = spec.dwell + rng.random_range(0..40);
        // detection gaps only inside the hold, away from its ends
        let gap_len = if hold > spec.dwell + spec.gap_max + 2 && rng.random_bool(0.5) {
            rng.random_range(1..=spec.gap_max)
        } else {
            0
        };
        let gap_at = start + spec.dwell + 1;
        for t in 0..hold {
            let frame = start + t;
            let jitter = rng.random_range(-0.003..0.003);
            if gap_len > 0 && (gap_at..gap_at + gap_len).contains(&frame) {
                batter.push(None);
            } else {
                batter.push(Some((cx + jitter, cy)));
            }
        }
        let speed = rng.random_range(0.01..0.03) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut end = batter.len() - 1;
        loop {
            cx += speed;
            if !(0.30..=0.70).contains(&cx) {
                break;
            }
            end = batter.len();
            batter.push(Some((cx, cy)));
        }
        // the exit frame is always observed, then the batter walks off
        for _ in 0..rng.random_range(1..6) {
            if !(BOX_W / 2.0..=1.0 - BOX_W / 2.0).contains(&cx) {
                break;
            }
            batter.push(Some((cx, cy)));
            cx += speed;
        }
        truth.push(ClipBounds {
            start_frame: start as u64,
            end_frame: end as u64,
        });
        idle(&mut rng, &mut batter);
    }

    let fielders: Vec<(f64, f64)> = (0..spec.fielders)
        .map(|i| {
            let x = if i % 2 == 0 {
                rng.random_range(0.05..0.2)
            } else {
                rng.random_range(0.8..0.95)
            };
            (x, rng.random_range(0.15..0.4))
        })
        .collect();
    let mut frames = Vec::with_capacity(batter.len());
    for (t, b) in batter.iter().enumerate() {
        let frame = t as u64;
        let mut boxes = Vec::new();
        for &(fx, fy) in &fielders {
            let j = rng.random_range(-0.005..0.005);
            boxes.push(centered_box(frame, fx + j, fy, rng.random_range(0.6..1.0)));
        }
        if let Some((bx, by)) = *b {
            boxes.push(centered_box(frame, bx, by, rng.random_range(0.7..1.0)));
        }
        for _ in 0..spec.ghosts {
            let (gx, gy) = (rng.random_range(0.1..0.9), rng.random_range(0.15..0.85));
            boxes.push(centered_box(frame, gx, gy, rng.random_range(0.0..spec.conf_min)));
        }
        // detector output order carries no meaning
        let k = boxes.len();
        boxes.rotate_left(rng.random_range(0..k.max(1)));
        frames.push(boxes);
    }
    PlantedStream {
        stream: DetectionStream::from_frames(frames),
        truth,
    }
}
