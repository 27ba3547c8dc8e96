//! Match-statistics case study: runs-based weak labels, joining
//! predictions to ball records, region distributions, deviation metrics
//! and the two reference baselines.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pose::{BallRecord, FieldRegion, ShotLabel};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum WeakError {
    #[error("duplicate delivery key {match_id} over {over} ball {ball} in {input}")]
    DuplicateOverKey {
        input: &'static str,
        match_id: String,
        over: u32,
        ball: u8,
    },
    #[error("region {0} is populated in only one table")]
    RegionMismatch(FieldRegion),
    #[error("predictions row {row}: {detail}")]
    MalformedPrediction { row: usize, detail: String },
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

/// Runs ≥ 3 are High, runs ≤ 1 are Low, 2 carries no label.
pub fn heuristic_energy(runs: u32) -> Option<ShotLabel> {
    match runs {
        0 | 1 => Some(ShotLabel::Low),
        2 => None,
        _ => Some(ShotLabel::High),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShotSource {
    Heuristic,
    GroundTruth,
    ModelPrediction,
    RandomBaseline,
    RunsBaseline,
}

/// A delivery with its field region and an energy label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnergyShot {
    pub match_id: String,
    pub over_number: u32,
    pub ball_in_over: u8,
    pub bowler: String,
    pub runs: u32,
    pub region: FieldRegion,
    pub energy: ShotLabel,
    pub source: ShotSource,
}

/// Per-delivery classifier output.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub match_id: String,
    pub over_number: u32,
    pub ball_in_over: u8,
    pub label: ShotLabel,
    pub score: f64,
}

type DeliveryKey = (String, u32, u8);

impl Prediction {
    fn key(&self) -> DeliveryKey {
        (self.match_id.clone(), self.over_number, self.ball_in_over)
    }
}

fn record_key(r: &BallRecord) -> DeliveryKey {
    (r.match_id.clone(), r.over_number, r.ball_in_over)
}

pub const PREDICTIONS_CSV_HEADER: &str = "match_id,over,ball,label,score";

pub fn predictions_to_csv(preds: &[Prediction]) -> String {
    let mut out = String::from(PREDICTIONS_CSV_HEADER);
    out.push('\n');
    for p in preds {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.match_id, p.over_number, p.ball_in_over, p.label, p.score
        ));
    }
    out
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, WeakError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let malformed = |row: usize, detail: String| WeakError::MalformedPrediction { row, detail };
    let headers = reader.headers().map_err(|e| malformed(0, e.to_string()))?;
    let expected: Vec<&str> = PREDICTIONS_CSV_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(malformed(0, format!("header must be {PREDICTIONS_CSV_HEADER}")));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| malformed(row, e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let over = field(1).parse().map_err(|_| malformed(row, format!("bad over {:?}", field(1))))?;
        let ball = field(2).parse().map_err(|_| malformed(row, format!("bad ball {:?}", field(2))))?;
        let label = field(3).parse().map_err(|e: String| malformed(row, e))?;
        let score: f64 = field(4).parse().map_err(|_| malformed(row, format!("bad score {:?}", field(4))))?;
        out.push(Prediction {
            match_id: field(0).to_owned(),
            over_number: over,
            ball_in_over: ball,
            label,
            score,
        });
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>, WeakError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| WeakError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_predictions(&text)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JoinOutcome {
    /// In prediction order.
    pub shots: Vec<EnergyShot>,
    /// Predictions with no ball record.
    pub unmatched: Vec<Prediction>,
}

/// Inner join on (match, over, ball). Keys must be unique on each side.
pub fn join_predictions(
    records: &[BallRecord],
    predictions: &[Prediction],
    source: ShotSource,
) -> Result<JoinOutcome, WeakError> {
    let mut by_key: HashMap<DeliveryKey, &BallRecord> = HashMap::with_capacity(records.len());
    for r in records {
        if by_key.insert(record_key(r), r).is_some() {
            return Err(WeakError::DuplicateOverKey {
                input: "ball records",
                match_id: r.match_id.clone(),
                over: r.over_number,
                ball: r.ball_in_over,
            });
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(predictions.len());
    let mut shots = Vec::new();
    let mut unmatched = Vec::new();
    for p in predictions {
        let key = p.key();
        if !seen.insert(key.clone()) {
            return Err(WeakError::DuplicateOverKey {
                input: "predictions",
                match_id: p.match_id.clone(),
                over: p.over_number,
                ball: p.ball_in_over,
            });
        }
        match by_key.get(&key) {
            Some(r) => shots.push(EnergyShot {
                match_id: r.match_id.clone(),
                over_number: r.over_number,
                ball_in_over: r.ball_in_over,
                bowler: r.bowler.clone(),
                runs: r.runs,
                region: r.region,
                energy: p.label,
                source,
            }),
            None => unmatched.push(p.clone()),
        }
    }
    Ok(JoinOutcome { shots, unmatched })
}

/// Weak labels from runs; deliveries with 2 runs are dropped.
pub fn heuristic_shots(records: &[BallRecord]) -> Vec<EnergyShot> {
    records
        .iter()
        .filter_map(|r| {
            heuristic_energy(r.runs).map(|energy| EnergyShot {
                match_id: r.match_id.clone(),
                over_number: r.over_number,
                ball_in_over: r.ball_in_over,
                bowler: r.bowler.clone(),
                runs: r.runs,
                region: r.region,
                energy,
                source: ShotSource::Heuristic,
            })
        })
        .collect()
}

/// Percentage of one class's shots per region, indexed by
/// [`FieldRegion::index`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionDistribution {
    pub shares: [f64; 8],
    /// Shots behind the shares; 0 means the class was empty and every share is 0.
    pub count: usize,
}

impl RegionDistribution {
    pub fn share(&self, region: FieldRegion) -> f64 {
        self.shares[region.index()]
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

pub fn region_distribution(shots: &[EnergyShot], class: ShotLabel) -> RegionDistribution {
    let mut counts = [0usize; 8];
    for s in shots.iter().filter(|s| s.energy == class) {
        counts[s.region.index()] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        log::warn!("no {class} shots; region distribution is all zero");
        return RegionDistribution {
            shares: [0.0; 8],
            count: 0,
        };
    }
    RegionDistribution {
        shares: counts.map(|c| 100.0 * c as f64 / total as f64),
        count: total,
    }
}

/// (High, Low) distributions of one shot set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistributionPair {
    pub high: RegionDistribution,
    pub low: RegionDistribution,
}

impl DistributionPair {
    pub fn of(shots: &[EnergyShot]) -> Self {
        DistributionPair {
            high: region_distribution(shots, ShotLabel::High),
            low: region_distribution(shots, ShotLabel::Low),
        }
    }
}

/// Total absolute share difference over both classes, in percentage points.
pub fn distribution_deviation(a: &DistributionPair, b: &DistributionPair) -> f64 {
    let l1 = |x: &RegionDistribution, y: &RegionDistribution| -> f64 {
        x.shares.iter().zip(&y.shares).map(|(p, q)| (p - q).abs()).sum()
    };
    l1(&a.high, &b.high) + l1(&a.low, &b.low)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProportionRow {
    pub high_ratio: f64,
    pub low_ratio: f64,
    pub total: usize,
}

/// Per-region High/Low split; `None` for regions without shots.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ProportionTable {
    rows: [Option<ProportionRow>; 8],
}

impl ProportionTable {
    /// Table from already-computed High ratios and region totals.
    pub fn from_ratios(rows: &[(FieldRegion, f64, usize)]) -> Self {
        let mut table = ProportionTable::default();
        for &(region, high_ratio, total) in rows {
            table.rows[region.index()] = Some(ProportionRow {
                high_ratio,
                low_ratio: 1.0 - high_ratio,
                total,
            });
        }
        table
    }

    pub fn row(&self, region: FieldRegion) -> Option<&ProportionRow> {
        self.rows[region.index()].as_ref()
    }

    pub fn rows(&self) -> impl Iterator<Item = (FieldRegion, &ProportionRow)> {
        FieldRegion::ALL
            .into_iter()
            .filter_map(|r| self.row(r).map(|row| (r, row)))
    }
}

pub fn proportion_table(shots: &[EnergyShot]) -> ProportionTable {
    let mut high = [0usize; 8];
    let mut total = [0usize; 8];
    for s in shots {
        total[s.region.index()] += 1;
        if s.energy.is_high() {
            high[s.region.index()] += 1;
        }
    }
    let mut table = ProportionTable::default();
    for i in 0..8 {
        if total[i] > 0 {
            let h = high[i] as f64 / total[i] as f64;
            table.rows[i] = Some(ProportionRow {
                high_ratio: h,
                low_ratio: (total[i] - high[i]) as f64 / total[i] as f64,
                total: total[i],
            });
        }
    }
    table
}

/// Mean absolute High-ratio difference over populated regions, in
/// percentage points.
pub fn avg_proportion_deviation(truth: &ProportionTable, model: &ProportionTable) -> Result<f64, WeakError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for region in FieldRegion::ALL {
        match (truth.row(region), model.row(region)) {
            (Some(t), Some(m)) => {
                sum += (t.high_ratio - m.high_ratio).abs();
                n += 1;
            }
            (None, None) => {}
            _ => return Err(WeakError::RegionMismatch(region)),
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * sum / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    Random,
    RunsApprox,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Random => "random",
            BaselineKind::RunsApprox => "runs-approx",
        })
    }
}

/// Reference predictions. Random draws a fair coin per delivery, keyed by
/// the delivery so the draw does not depend on record order; RunsApprox
/// applies [`heuristic_energy`] and omits 2-run deliveries.
pub fn baseline_predict(kind: BaselineKind, records: &[BallRecord], seed: u64) -> Vec<Prediction> {
    records
        .iter()
        .filter_map(|r| {
            let (label, score) = match kind {
                BaselineKind::Random => {
                    let key = format!("{}.{}", r.over_number, r.ball_in_over);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &["random-baseline", &r.match_id, &key]));
                    let u: f64 = rng.random();
                    (ShotLabel::from_probability(u), u)
                }
                BaselineKind::RunsApprox => {
                    let label = heuristic_energy(r.runs)?;
                    (label, if label.is_high() { 1.0 } else { 0.0 })
                }
            };
            Some(Prediction {
                match_id: r.match_id.clone(),
                over_number: r.over_number,
                ball_in_over: r.ball_in_over,
                label,
                score,
            })
        })
        .collect()
}

/// Fraction of reference shots whose delivery got the same label, and the
/// number of deliveries compared. Reference shots without a prediction
/// are not counted.
pub fn label_agreement(predictions: &[Prediction], reference: &[EnergyShot]) -> (f64, usize) {
    let by_key: HashMap<DeliveryKey, ShotLabel> = predictions.iter().map(|p| (p.key(), p.label)).collect();
    let mut n = 0usize;
    let mut agree = 0usize;
    for s in reference {
        if let Some(&l) = by_key.get(&(s.match_id.clone(), s.over_number, s.ball_in_over)) {
            n += 1;
            if l == s.energy {
                agree += 1;
            }
        }
    }
    if n == 0 {
        (0.0, 0)
    } else {
        (agree as f64 / n as f64, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseRow {
    pub first_over: u32,
    /// Exclusive; `None` for the open last bucket.
    pub end_over: Option<u32>,
    pub low: usize,
    pub high: usize,
}

impl PhaseRow {
    pub fn label(&self) -> String {
        match self.end_over {
            Some(end) => format!("{}-{}", self.first_over, end),
            None => format!("{}+", self.first_over),
        }
    }
}

/// Counts per over bucket of `width` overs: `closed` bounded buckets then
/// one open bucket. `(10, 4)` gives 0–10, 10–20, 20–30, 30–40, 40+.
pub fn summarize_phases(shots: &[EnergyShot], width: u32, closed: u32) -> Vec<PhaseRow> {
    let width = width.max(1);
    let mut rows: Vec<PhaseRow> = (0..=closed)
        .map(|b| PhaseRow {
            first_over: b * width,
            end_over: (b < closed).then_some((b + 1) * width),
            low: 0,
            high: 0,
        })
        .collect();
    for s in shots {
        let b = (s.over_number / width).min(closed) as usize;
        match s.energy {
            ShotLabel::High => rows[b].high += 1,
            ShotLabel::Low => rows[b].low += 1,
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BowlerRow {
    pub bowler: String,
    pub runs: u32,
    pub high: usize,
    pub low: usize,
    pub balls: usize,
}

/// Per-bowler totals, most runs first, ties by name.
pub fn summarize_by_bowler(shots: &[EnergyShot]) -> Vec<BowlerRow> {
    let mut map: BTreeMap<&str, BowlerRow> = BTreeMap::new();
    for s in shots {
        let row = map.entry(&s.bowler).or_insert_with(|| BowlerRow {
            bowler: s.bowler.clone(),
            runs: 0,
            high: 0,
            low: 0,
            balls: 0,
        });
        row.runs += s.runs;
        row.balls += 1;
        match s.energy {
            ShotLabel::High => row.high += 1,
            ShotLabel::Low => row.low += 1,
        }
    }
    let mut rows: Vec<BowlerRow> = map.into_values().collect();
    rows.sort_by(|a, b| b.runs.cmp(&a.runs).then_with(|| a.bowler.cmp(&b.bowler)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use FieldRegion::*;

    fn shot(region: FieldRegion, energy: ShotLabel) -> EnergyShot {
        EnergyShot {
            match_id: "m".into(),
            over_number: 0,
            ball_in_over: 1,
            bowler: "b".into(),
            runs: 0,
            region,
            energy,
            source: ShotSource::GroundTruth,
        }
    }

    fn record(over: u32, ball: u8, runs: u32, region: FieldRegion, bowler: &str) -> BallRecord {
        BallRecord {
            match_id: "m1".into(),
            over_number: over,
            ball_in_over: ball,
            batter: "bat".into(),
            bowler: bowler.into(),
            runs,
            region,
        }
    }

    fn pred(over: u32, ball: u8, label: ShotLabel) -> Prediction {
        Prediction {
            match_id: "m1".into(),
            over_number: over,
            ball_in_over: ball,
            label,
            score: if label.is_high() { 0.9 } else { 0.1 },
        }
    }

    #[test]
    fn heuristic_partition() {
        assert_eq!(heuristic_energy(4), Some(ShotLabel::High));
        assert_eq!(heuristic_energy(0), Some(ShotLabel::Low));
        assert_eq!(heuristic_energy(2), None);
        for r in 0..100 {
            let expected = if r <= 1 {
                Some(ShotLabel::Low)
            } else if r == 2 {
                None
            } else {
                Some(ShotLabel::High)
            };
            assert_eq!(heuristic_energy(r), expected);
        }
    }

    #[test]
    fn join_full_and_partial() {
        let recs: Vec<_> = (0..5).map(|i| record(i, 1, i, Cover, "x")).collect();
        let preds: Vec<_> = (0..5).map(|i| pred(i, 1, ShotLabel::High)).collect();
        let j = join_predictions(&recs, &preds, ShotSource::ModelPrediction).unwrap();
        assert_eq!((j.shots.len(), j.unmatched.len()), (5, 0));

        let mut preds = preds[..4].to_vec();
        preds.push(pred(99, 1, ShotLabel::Low));
        let j = join_predictions(&recs, &preds, ShotSource::ModelPrediction).unwrap();
        assert_eq!((j.shots.len(), j.unmatched.len()), (4, 1));
        assert_eq!(j.unmatched[0].over_number, 99);
    }

    #[test]
    fn join_rejects_duplicates() {
        let recs = vec![record(1, 1, 0, Cover, "x")];
        let preds = vec![pred(1, 1, ShotLabel::High), pred(1, 1, ShotLabel::Low)];
        assert!(matches!(
            join_predictions(&recs, &preds, ShotSource::ModelPrediction),
            Err(WeakError::DuplicateOverKey { input: "predictions", .. })
        ));
        let recs = vec![record(1, 1, 0, Cover, "x"), record(1, 1, 4, Point, "x")];
        assert!(matches!(
            join_predictions(&recs, &[], ShotSource::ModelPrediction),
            Err(WeakError::DuplicateOverKey { input: "ball records", .. })
        ));
    }

    #[test]
    fn distributions() {
        let point_mass: Vec<_> = (0..10).map(|_| shot(Cover, ShotLabel::High)).collect();
        let d = region_distribution(&point_mass, ShotLabel::High);
        assert_eq!(d.share(Cover), 100.0);
        assert_eq!(d.shares.iter().sum::<f64>(), 100.0);
        let pair = [
            shot(Cover, ShotLabel::High),
            shot(Cover, ShotLabel::High),
            shot(Point, ShotLabel::High),
            shot(Point, ShotLabel::High),
        ];
        let d = region_distribution(&pair, ShotLabel::High);
        assert_eq!((d.share(Cover), d.share(Point)), (50.0, 50.0));
        let empty = region_distribution(&pair, ShotLabel::Low);
        assert!(empty.is_empty());
        assert_eq!(empty.shares, [0.0; 8]);
    }

    #[test]
    fn deviation_arithmetic() {
        let mk = |shares: [f64; 8]| RegionDistribution { shares, count: 1 };
        let mut h = [0.0; 8];
        h[0] = 50.0;
        h[1] = 50.0;
        let mut h2 = h;
        h2[0] = 40.0;
        h2[1] = 60.0;
        let low = mk([12.5; 8]);
        let a = DistributionPair { high: mk(h), low };
        let b = DistributionPair { high: mk(h2), low };
        assert_eq!(distribution_deviation(&a, &a), 0.0);
        assert_eq!(distribution_deviation(&a, &b), 20.0);
    }

    #[test]
    fn proportions() {
        let t = proportion_table(&[shot(Point, ShotLabel::High)]);
        let row = t.row(Point).unwrap();
        assert_eq!((row.high_ratio, row.low_ratio, row.total), (1.0, 0.0, 1));
        assert!(t.row(Cover).is_none());

        let t = ProportionTable::from_ratios(&[(Cover, 0.48, 143)]);
        assert!((t.row(Cover).unwrap().low_ratio - 0.52).abs() < 1e-12);
    }

    #[test]
    fn proportion_deviation_cases() {
        let all: Vec<_> = FieldRegion::ALL.iter().map(|&r| (r, 0.5, 10)).collect();
        let t = ProportionTable::from_ratios(&all);
        assert_eq!(avg_proportion_deviation(&t, &t).unwrap(), 0.0);
        let mut shifted = all.clone();
        shifted[3].1 = 0.58;
        let m = ProportionTable::from_ratios(&shifted);
        assert!((avg_proportion_deviation(&t, &m).unwrap() - 1.0).abs() < 1e-12);
        let partial = ProportionTable::from_ratios(&all[..7]);
        assert_eq!(
            avg_proportion_deviation(&t, &partial),
            Err(WeakError::RegionMismatch(ThirdMan))
        );
    }

    #[test]
    fn phases() {
        let rows = summarize_phases(&[], 10, 4);
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.low == 0 && r.high == 0));
        assert_eq!(rows[4].label(), "40+");
        assert_eq!(rows[0].label(), "0-10");
        let shots: Vec<_> = [3u32, 9, 10, 45, 60]
            .iter()
            .map(|&o| EnergyShot {
                over_number: o,
                ..shot(Cover, ShotLabel::Low)
            })
            .collect();
        let rows = summarize_phases(&shots, 10, 4);
        assert_eq!(rows.iter().map(|r| r.low).collect::<Vec<_>>(), vec![2, 1, 0, 0, 2]);
    }

    #[test]
    fn bowlers() {
        let mk = |bowler: &str, runs: u32, e: ShotLabel| EnergyShot {
            bowler: bowler.into(),
            runs,
            ..shot(Cover, e)
        };
        let shots = vec![
            mk("a", 4, ShotLabel::High),
            mk("a", 0, ShotLabel::Low),
            mk("b", 6, ShotLabel::High),
            mk("b", 1, ShotLabel::Low),
        ];
        let rows = summarize_by_bowler(&shots);
        assert_eq!(rows[0].bowler, "b");
        assert_eq!((rows[0].runs, rows[0].high, rows[0].low, rows[0].balls), (7, 1, 1, 2));
        let single = summarize_by_bowler(&shots[..2]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].balls, 2);
    }

    #[test]
    fn baselines() {
        let recs: Vec<_> = (0..50).map(|i| record(i / 6, (i % 6 + 1) as u8, i % 7, Cover, "x")).collect();
        let a = baseline_predict(BaselineKind::Random, &recs, 5);
        assert_eq!(a, baseline_predict(BaselineKind::Random, &recs, 5));
        assert_ne!(a, baseline_predict(BaselineKind::Random, &recs, 6));
        let mut rev = recs.clone();
        rev.reverse();
        let mut b = baseline_predict(BaselineKind::Random, &rev, 5);
        b.reverse();
        assert_eq!(a, b);

        let runs = baseline_predict(BaselineKind::RunsApprox, &recs, 0);
        assert_eq!(runs.len(), recs.iter().filter(|r| r.runs != 2).count());
        let truth = heuristic_shots(&recs);
        assert_eq!(label_agreement(&runs, &truth), (1.0, truth.len()));
    }

    #[test]
    fn predictions_csv_round_trip() {
        let preds = vec![pred(3, 2, ShotLabel::High), pred(7, 6, ShotLabel::Low)];
        let text = predictions_to_csv(&preds);
        assert_eq!(parse_predictions(&text).unwrap(), preds);
        assert!(parse_predictions("a,b\n").is_err());
    }

    fn arb_shots() -> impl Strategy<Value = Vec<EnergyShot>> {
        prop::collection::vec((0usize..8, any::<bool>()), 0..60).prop_map(|v| {
            v.into_iter()
                .map(|(r, h)| shot(FieldRegion::ALL[r], if h { ShotLabel::High } else { ShotLabel::Low }))
                .collect()
        })
    }

    fn arb_pair() -> impl Strategy<Value = DistributionPair> {
        arb_shots().prop_map(|s| DistributionPair::of(&s))
    }

    proptest! {
        #[test]
        fn distribution_matches_counting(shots in arb_shots()) {
            for class in [ShotLabel::High, ShotLabel::Low] {
                let d = region_distribution(&shots, class);
                let n = shots.iter().filter(|s| s.energy == class).count();
                for r in FieldRegion::ALL {
                    let c = shots.iter().filter(|s| s.energy == class && s.region == r).count();
                    let expected = if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 };
                    prop_assert_eq!(d.share(r), expected);
                }
                if n > 0 {
                    prop_assert!((d.shares.iter().sum::<f64>() - 100.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn deviation_is_a_metric(a in arb_pair(), b in arb_pair(), c in arb_pair()) {
            let d = distribution_deviation;
            prop_assert!(d(&a, &b) >= 0.0);
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
            if a.high.shares != b.high.shares || a.low.shares != b.low.shares {
                prop_assert!(d(&a, &b) > 0.0);
            }
        }

        #[test]
        fn proportion_deviation_symmetries(ratios in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 8)) {
            let t = ProportionTable::from_ratios(&FieldRegion::ALL.iter().zip(&ratios).map(|(&r, p)| (r, p.0, 5)).collect::<Vec<_>>());
            let m = ProportionTable::from_ratios(&FieldRegion::ALL.iter().zip(&ratios).map(|(&r, p)| (r, p.1, 5)).collect::<Vec<_>>());
            let forward = avg_proportion_deviation(&t, &m).unwrap();
            prop_assert_eq!(forward, avg_proportion_deviation(&m, &t).unwrap());
            let on_low = 100.0 * FieldRegion::ALL.iter().map(|&r| (t.row(r).unwrap().low_ratio - m.row(r).unwrap().low_ratio).abs()).sum::<f64>() / 8.0;
            prop_assert!((forward - on_low).abs() < 1e-9);
        }

        #[test]
        fn join_is_permutation_invariant(n in 1usize..30, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let recs: Vec<_> = (0..n as u32).map(|i| record(i / 6, (i % 6 + 1) as u8, i % 5, FieldRegion::ALL[i as usize % 8], "x")).collect();
            let preds: Vec<_> = (0..n as u32 + 3).map(|i| pred(i / 6, (i % 6 + 1) as u8, if i % 3 == 0 { ShotLabel::High } else { ShotLabel::Low })).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut r2, mut p2) = (recs.clone(), preds.clone());
            r2.shuffle(&mut rng);
            p2.shuffle(&mut rng);
            let mut a = join_predictions(&recs, &preds, ShotSource::ModelPrediction).unwrap().shots;
            let mut b = join_predictions(&r2, &p2, ShotSource::ModelPrediction).unwrap().shots;
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn phase_buckets_partition(overs in prop::collection::vec(0u32..60, 0..80)) {
            let shots: Vec<_> = overs.iter().map(|&o| EnergyShot { over_number: o, ..shot(Cover, ShotLabel::High) }).collect();
            let rows = summarize_phases(&shots, 10, 4);
            prop_assert_eq!(rows.iter().map(|r| r.low + r.high).sum::<usize>(), shots.len());
            let by_bowler = summarize_by_bowler(&shots);
            prop_assert_eq!(by_bowler.iter().map(|r| r.balls).sum::<usize>(), shots.len());
        }
    }
}
