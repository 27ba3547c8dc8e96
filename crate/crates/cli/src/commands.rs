use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use log::{info, warn};
use shotintent::classifiers::ModelKind;
use shotintent::config::RunConfig;
use shotintent::container::{load_model, save_model};
use shotintent::cv::{self, PreparedDataset};
use shotintent::exec::Execution;
use shotintent::metrics::{self, RunResult};
use shotintent::pose::{self, BallRecord, FoldedDataset, ShotLabel};
use shotintent::report::{self, DeviationRow};
use shotintent::segment::{self, DetectionStream};
use shotintent::svg::render_wagon_wheel;
use shotintent::synthetic::{self, AmplitudeSpec, PlantedSpec, RecordsSpec, StreamSpec};
use shotintent::weak::{self, BaselineKind, DistributionPair, EnergyShot, Prediction, ShotSource};

use crate::{
    AblateArgs, CaseStudyArgs, Cli, Command, EvaluateArgs, InspectArgs, ModelArg, PlotArgs, SegmentArgs,
    SynthArgs, SynthKind, TrainArgs,
};

/// Bad invocation; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

struct Ctx {
    config: RunConfig,
    seed: u64,
    exec: Execution,
}

impl Ctx {
    fn resolve(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for assignment in &cli.overrides {
            config
                .apply_override(assignment)
                .map_err(|e| usage(format!("--set {assignment}: {e}")))?;
        }
        if let Some(w) = cli.workers {
            config.workers = w;
        }
        let seed = config.resolve_seed(cli.seed)?;
        info!("resolved config: {}", config.to_json_line());
        Ok(Ctx {
            exec: Execution::from_workers(config.workers),
            config,
            seed,
        })
    }

    fn path(&self, flag: &Option<PathBuf>, configured: &Option<PathBuf>, flag_name: &str, key: &str) -> Result<PathBuf> {
        flag.clone()
            .or_else(|| configured.clone())
            .ok_or_else(|| usage(format!("missing --{flag_name} (or paths.{key} in the config)")))
    }

    fn data(&self, flag: &Option<PathBuf>) -> Result<PathBuf> {
        self.path(flag, &self.config.paths.data, "data", "data")
    }

    fn out_dir(&self, flag: &Option<PathBuf>) -> Result<PathBuf> {
        let dir = flag
            .clone()
            .or_else(|| self.config.paths.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn load_dataset(&self, root: &Path) -> Result<FoldedDataset> {
        let ds = pose::load_dataset(root, self.exec)?;
        info!("loaded {} clips from {} folders", ds.len(), ds.num_folders());
        Ok(ds)
    }
}

fn kind_of(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::MotionRange => ModelKind::MotionRangeForest,
        ModelArg::Cnn1d => ModelKind::Cnn1d,
        ModelArg::Lstm => ModelKind::LstmSeq,
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::resolve(&cli)?;
    match &cli.command {
        Command::Inspect(a) => inspect(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Ablate(a) => ablate(&ctx, a),
        Command::Segment(a) => segment_cmd(&ctx, a),
        Command::CaseStudy(a) => case_study(&ctx, a),
        Command::Plot(a) => plot(&ctx, a),
        Command::Synth(a) => synth(&ctx, a),
    }
}

fn inspect(ctx: &Ctx, a: &InspectArgs) -> Result<()> {
    let ds = ctx.load_dataset(&ctx.data(&a.data)?)?;
    let counts = ds.counts();
    print!("{}", report::dataset_table(&counts));
    if let Some(dir) = &a.out {
        let dir = ctx.out_dir(&Some(dir.clone()))?;
        write(&dir.join("dataset.csv"), &report::dataset_csv(&counts))?;
    }
    Ok(())
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let kind = kind_of(a.model);
    let ds = ctx.load_dataset(&ctx.data(&a.data)?)?;
    if kind.uses_validation() {
        match a.val.as_deref() {
            None => return Err(usage(format!("{kind} needs --val <folder> for early stopping"))),
            Some(v) if ds.folder(v).is_none() => return Err(usage(format!("no folder named {v:?}"))),
            Some(_) => {}
        }
    }
    let data = PreparedDataset::new(&ds, &ctx.config.preprocess, ctx.exec)?;
    let model = cv::train_all(&data, a.val.as_deref(), kind, &ctx.config.train)?;
    if model.meta.no_improvement {
        warn!("validation F1 never improved; the saved model has its initial parameters");
    }
    info!(
        "{kind}: {} epochs, best epoch {}",
        model.meta.epochs_run, model.meta.best_epoch
    );
    let path = match &a.out {
        Some(p) => p.clone(),
        None => ctx.out_dir(&None)?.join("model.bin"),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    save_model(&model, &path)?;
    println!("saved {kind} model to {}", path.display());
    Ok(())
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let ds = ctx.load_dataset(&ctx.data(&a.data)?)?;
    let dir = ctx.out_dir(&a.out)?;
    if let Some(file) = &a.model_file {
        return score_saved(ctx, &ds, file, &dir);
    }
    let kind = kind_of(a.model);
    let outcome = cv::run_cv(&ds, kind, &ctx.config.train, &ctx.config.preprocess, ctx.exec)?;
    if !outcome.skipped.is_empty() {
        warn!("{} splits skipped", outcome.skipped.len());
    }
    write(&dir.join("runs.csv"), &metrics::runs_to_csv(&outcome.runs))?;
    write(&dir.join("summary.csv"), &outcome.report.to_csv())?;
    print!("{}", report::aggregate_table(&[(kind.name().to_string(), outcome.report)]));
    Ok(())
}

/// Scores every clip with a saved model; clips whose id names a delivery
/// also go to `predictions.csv`.
fn score_saved(ctx: &Ctx, ds: &FoldedDataset, file: &Path, dir: &Path) -> Result<()> {
    let model = load_model(file)?;
    let data = PreparedDataset::new(ds, &model.preprocess, ctx.exec)?;
    let (mut labels, mut scores, mut preds) = (Vec::new(), Vec::new(), Vec::new());
    let mut undated = 0usize;
    for clip in data.clips() {
        let score = model.predict_proba(clip)?;
        let label = ShotLabel::from_probability(score);
        if let Some(truth) = clip.meta.label {
            labels.push(truth);
            scores.push(score);
        }
        match (clip.meta.over_number, clip.meta.ball_in_over) {
            (Some(over_number), Some(ball_in_over)) => preds.push(Prediction {
                match_id: clip.meta.folder_id.clone(),
                over_number,
                ball_in_over,
                label,
                score,
            }),
            _ => undated += 1,
        }
    }
    if undated > 0 {
        warn!("{undated} clips carry no over.ball in their id and are left out of predictions.csv");
    }
    let hard: Vec<ShotLabel> = scores.iter().map(|&p| ShotLabel::from_probability(p)).collect();
    let run = RunResult {
        val_folder: None,
        test_folder: "all".into(),
        accuracy: metrics::accuracy(&labels, &hard)?,
        auc_roc: metrics::auc_roc(&labels, &scores)?,
        f1: metrics::f1_score(&labels, &hard)?,
        n_test: labels.len(),
    };
    write(&dir.join("predictions.csv"), &weak::predictions_to_csv(&preds))?;
    write(&dir.join("metrics.csv"), &metrics::runs_to_csv(std::slice::from_ref(&run)))?;
    println!(
        "{} on {} clips: accuracy {:.2}, AUC-ROC {:.2}, F1 {:.2}",
        model.kind, run.n_test, run.accuracy, run.auc_roc, run.f1
    );
    Ok(())
}

fn ablate(ctx: &Ctx, a: &AblateArgs) -> Result<()> {
    if a.lengths.contains(&0) {
        return Err(usage("--lengths must be positive"));
    }
    let ds = ctx.load_dataset(&ctx.data(&a.data)?)?;
    let dir = ctx.out_dir(&a.out)?;
    let rows = cv::ablate_clip_length(
        &ds,
        kind_of(a.model),
        &a.lengths,
        &ctx.config.train,
        &ctx.config.preprocess,
        ctx.exec,
    )?;
    write(&dir.join("ablation.csv"), &report::ablation_csv(&rows))?;
    print!("{}", report::ablation_table(&rows));
    Ok(())
}

fn segment_cmd(ctx: &Ctx, a: &SegmentArgs) -> Result<()> {
    let path = ctx.path(&a.detections, &ctx.config.paths.detections, "detections", "detections")?;
    let stream = DetectionStream::load_jsonl(&path)?;
    let clips = segment::extract_clips(&stream, &ctx.config.segment)?;
    let dir = ctx.out_dir(&a.out)?;
    write(&dir.join("clips.csv"), &segment::clips_to_csv(&a.match_id, &clips))?;
    println!("{} clips in {} frames", clips.len(), stream.len());
    Ok(())
}

fn join(records: &[BallRecord], preds: &[Prediction], source: ShotSource) -> Result<weak::JoinOutcome> {
    let outcome = weak::join_predictions(records, preds, source)?;
    if !outcome.unmatched.is_empty() {
        warn!("{:?}: {} predictions matched no ball record", source, outcome.unmatched.len());
    }
    Ok(outcome)
}

fn deviation_row(name: &str, preds: &[Prediction], shots: &[EnergyShot], reference: &[EnergyShot]) -> DeviationRow {
    let proportion = weak::avg_proportion_deviation(&weak::proportion_table(reference), &weak::proportion_table(shots));
    if let Err(e) = &proportion {
        warn!("{name}: no proportion deviation ({e})");
    }
    DeviationRow {
        name: name.to_string(),
        accuracy: 100.0 * weak::label_agreement(preds, reference).0,
        distribution_deviation: Some(weak::distribution_deviation(
            &DistributionPair::of(shots),
            &DistributionPair::of(reference),
        )),
        proportion_deviation: proportion.ok(),
    }
}

fn write_wheels(dir: &Path, stem: &str, title: &str, shots: &[EnergyShot]) -> Result<()> {
    for class in [ShotLabel::High, ShotLabel::Low] {
        let dist = weak::region_distribution(shots, class);
        if dist.is_empty() {
            warn!("{title}: no {} shots", class.as_str());
        }
        let svg = render_wagon_wheel(&dist, &format!("{title} ({})", class.as_str()), class);
        write(&dir.join(format!("{stem}_{}.svg", class.as_str())), &svg)?;
    }
    Ok(())
}

fn case_study(ctx: &Ctx, a: &CaseStudyArgs) -> Result<()> {
    let records = pose::load_ball_records(ctx.path(&a.records, &ctx.config.paths.records, "records", "records")?)?;
    let preds = weak::load_predictions(ctx.path(
        &a.predictions,
        &ctx.config.paths.predictions,
        "predictions",
        "predictions",
    )?)?;
    let dir = ctx.out_dir(&a.out)?;

    let reference = match &a.truth {
        Some(path) => join(&records, &weak::load_predictions(path)?, ShotSource::GroundTruth)?.shots,
        None => weak::heuristic_shots(&records),
    };
    let model = join(&records, &preds, ShotSource::ModelPrediction)?;
    let random = weak::baseline_predict(BaselineKind::Random, &records, ctx.seed);
    let runs = weak::baseline_predict(BaselineKind::RunsApprox, &records, ctx.seed);
    let random_shots = join(&records, &random, ShotSource::RandomBaseline)?.shots;
    let runs_shots = join(&records, &runs, ShotSource::RunsBaseline)?.shots;

    let rows = vec![
        deviation_row(&BaselineKind::Random.to_string(), &random, &random_shots, &reference),
        deviation_row(&BaselineKind::RunsApprox.to_string(), &runs, &runs_shots, &reference),
        deviation_row(&a.name, &preds, &model.shots, &reference),
    ];
    let truth_table = weak::proportion_table(&reference);
    let model_table = weak::proportion_table(&model.shots);
    let phases = weak::summarize_phases(&model.shots, 10, 4);
    let bowlers = weak::summarize_by_bowler(&model.shots);

    write(&dir.join("proportions.csv"), &report::proportion_csv(&truth_table, &model_table))?;
    write(&dir.join("deviation.csv"), &report::deviation_csv(&rows))?;
    write(&dir.join("phases.csv"), &report::phase_csv(&phases))?;
    write(&dir.join("bowlers.csv"), &report::bowler_csv(&bowlers))?;
    write(&dir.join("unmatched.csv"), &report::unmatched_csv(&model.unmatched))?;
    write_wheels(&dir, "wagon_reference", "reference", &reference)?;
    write_wheels(&dir, "wagon_model", &a.name, &model.shots)?;

    println!("{}", report::proportion_table_text(&truth_table, &model_table));
    println!("{}", report::deviation_table(&rows));
    println!("{}", report::phase_table(&phases));
    print!("{}", report::bowler_table(&bowlers));
    Ok(())
}

fn plot(ctx: &Ctx, a: &PlotArgs) -> Result<()> {
    let records = pose::load_ball_records(ctx.path(&a.records, &ctx.config.paths.records, "records", "records")?)?;
    let shots = match &a.predictions {
        Some(path) => join(&records, &weak::load_predictions(path)?, ShotSource::ModelPrediction)?.shots,
        None => weak::heuristic_shots(&records),
    };
    let dir = ctx.out_dir(&a.out)?;
    write_wheels(&dir, "wagon", &a.title, &shots)?;
    println!("{} shots plotted", shots.len());
    Ok(())
}

fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<()> {
    match a.kind {
        SynthKind::Amplitude | SynthKind::Planted => {
            let ds = if matches!(a.kind, SynthKind::Amplitude) {
                let d = AmplitudeSpec::default();
                synthetic::amplitude_dataset(&AmplitudeSpec {
                    folders: a.folders.unwrap_or(d.folders),
                    clips_per_class: a.clips_per_class.unwrap_or(d.clips_per_class),
                    seed: ctx.seed,
                    ..d
                })
            } else {
                let d = PlantedSpec::default();
                synthetic::planted_dataset(&PlantedSpec {
                    folders: a.folders.unwrap_or(d.folders),
                    clips_per_class: a.clips_per_class.unwrap_or(d.clips_per_class),
                    seed: ctx.seed,
                    ..d
                })
            };
            pose::write_dataset(&a.out, &ds)?;
            println!("wrote {} clips in {} folders to {}", ds.len(), ds.num_folders(), a.out.display());
        }
        SynthKind::Stream => {
            let cfg = &ctx.config.segment;
            let planted = synthetic::planted_stream(&StreamSpec {
                shots: a.shots,
                dwell: cfg.dwell,
                gap_max: cfg.gap_max,
                conf_min: cfg.conf_min,
                seed: ctx.seed,
                ..StreamSpec::default()
            });
            write(&a.out, &planted.stream.to_jsonl())?;
            let truth = a.out.with_extension("truth.csv");
            write(&truth, &segment::clips_to_csv("truth", &planted.truth))?;
        }
        SynthKind::Records => {
            let d = RecordsSpec::default();
            let records = synthetic::ball_records(&RecordsSpec {
                matches: a.folders.unwrap_or(d.matches),
                balls_per_match: a.clips_per_class.map_or(d.balls_per_match, |c| 2 * c),
                seed: ctx.seed,
            });
            pose::write_ball_records(&a.out, &records)?;
            println!("wrote {} ball records to {}", records.len(), a.out.display());
        }
    }
    Ok(())
}
