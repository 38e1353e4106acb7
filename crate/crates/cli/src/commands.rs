use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use oodtrack_core::io::Dataset;
use oodtrack_core::meta::{run_protocol, Protocol, TrainOptions};
use oodtrack_core::metrics::GroupBy;
use oodtrack_core::pipeline::{
    self, ClusterOutput, DetectOutput, EmbedOutput, EvaluateOptions, MetaTrainOutput, TrackOutput, TrackerOverrides,
    STAGE_SCHEMA_VERSION,
};
use oodtrack_core::retrieval::{DbscanConfig, RetrievalConfig, DEFAULT_MIN_TRACK_LENGTH, DEFAULT_PCA_DIMS};
use oodtrack_core::segmentation::{DEFAULT_MIN_SIZE, DEFAULT_TAU};
use oodtrack_core::synth::{self, PerturbOp, SynthConfig};
use oodtrack_core::{EmbeddingPoint, Error};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::run_dir::{self, read_stage, stage_path, write_csv, write_stage, write_table};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "oodtrack", version, about = "Detect, track and retrieve out-of-distribution objects in video")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate or perturb synthetic data
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Threshold score maps into connected OOD segments
    Detect(DetectArgs),
    /// Fit the meta classifier under protocol M1 or M2
    MetaTrain(MetaTrainArgs),
    /// Drop segments the trained meta classifier rejects
    MetaApply(MetaApplyArgs),
    /// Link segments across frames into tracks
    Track(TrackArgs),
    /// Describe tracked segments and embed them in 2D
    Embed(EmbedArgs),
    /// Cluster the 2D embedding with DBSCAN
    Cluster(ClusterArgs),
    /// Compute the requested metric families
    Evaluate(EvaluateArgs),
    /// Merge every stage output of a run into one JSON plus CSV tables
    Report(RunArg),
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Render a synthetic dataset
    Generate {
        /// JSON generator config; missing fields take defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a controlled corruption to a dataset or to a track file
    Perturb {
        /// Operation as JSON text or a path to a JSON file
        #[arg(long)]
        op: String,
        /// Dataset manifest, for dataset-level operations
        #[arg(long, conflicts_with = "tracks")]
        dataset: Option<PathBuf>,
        /// track.json, for prediction-level operations
        #[arg(long)]
        tracks: Option<PathBuf>,
        /// Output directory (dataset) or file (tracks)
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArg {
    /// Run directory holding one <stage>.json per stage
    #[arg(long, default_value = "run")]
    run: PathBuf,
}

#[derive(Debug, Args)]
struct DatasetArg {
    /// Dataset manifest.json
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    data: DatasetArg,
    #[command(flatten)]
    run: RunArg,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_SIZE)]
    min_size: usize,
}

#[derive(Debug, Args)]
struct MetaTrainArgs {
    #[command(flatten)]
    data: DatasetArg,
    #[command(flatten)]
    run: RunArg,
    #[arg(long, default_value = "m1", value_parser = parse_protocol)]
    protocol: Protocol,
    /// l1 penalty; chosen by cross-validation when omitted
    #[arg(long)]
    lambda: Option<f64>,
    /// Training dataset for M2; detected with the run's tau and min size
    #[arg(long)]
    train_dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetaApplyArgs {
    #[command(flatten)]
    data: DatasetArg,
    #[command(flatten)]
    run: RunArg,
}

#[derive(Debug, Args)]
struct TrackArgs {
    #[command(flatten)]
    run: RunArg,
    /// Stage whose segments are tracked
    #[arg(long, default_value = "detect", value_parser = ["detect", "meta-apply"])]
    from: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Max center distance for merging split segments (pixels)
    #[arg(long)]
    aggregation_dist: Option<f64>,
    /// Max distance between a predicted and an observed center (pixels)
    #[arg(long)]
    center_dist: Option<f64>,
    #[arg(long)]
    min_iou: Option<f64>,
    #[arg(long)]
    regression_window: Option<u32>,
    #[arg(long)]
    max_gap: Option<u32>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[command(flatten)]
    data: DatasetArg,
    #[command(flatten)]
    run: RunArg,
    #[arg(long, default_value_t = DEFAULT_MIN_TRACK_LENGTH)]
    min_track_len: usize,
    #[arg(long, default_value_t = DEFAULT_PCA_DIMS)]
    pca_dims: usize,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory of <sequenceId>.oodf files replacing the built-in descriptor
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    run: RunArg,
    #[arg(long, default_value_t = 4.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 15)]
    min_pts: usize,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DatasetArg,
    #[command(flatten)]
    run: RunArg,
    #[arg(long)]
    pixel: bool,
    #[arg(long)]
    segment: bool,
    #[arg(long)]
    tracking: bool,
    #[arg(long)]
    clustering: bool,
    #[arg(long, value_parser = parse_group_by)]
    group_by: Option<GroupBy>,
    /// Stage whose segments are scored
    #[arg(long, default_value = "detect", value_parser = ["detect", "meta-apply", "track"])]
    segments_from: String,
    /// Count clusters holding only false positives in the impurity score
    #[arg(long)]
    count_fp_class: bool,
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse().map_err(|_| format!("expected m1 or m2, got {s:?}"))
}

fn parse_group_by(s: &str) -> Result<GroupBy, String> {
    s.parse().map_err(|_| format!("expected class or depth, got {s:?}"))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(cmd) => synth_cmd(cmd),
        Command::Detect(a) => detect(a),
        Command::MetaTrain(a) => meta_train(a),
        Command::MetaApply(a) => meta_apply(a),
        Command::Track(a) => track(a),
        Command::Embed(a) => embed(a),
        Command::Cluster(a) => cluster(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(&a.run),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset, Error> {
    let ds = Dataset::load(path)?;
    ds.manifest.validate()?;
    Ok(ds)
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn synth_cmd(cmd: SynthCommand) -> Result<(), CliError> {
    match cmd {
        SynthCommand::Generate { config, seed, out } => {
            let mut cfg: SynthConfig = match config {
                Some(p) => serde_json::from_str(&read_text(&p)?).map_err(Error::from)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let manifest = synth::generate(&cfg, &out)?;
            let frames: usize = manifest.sequences.iter().map(|s| s.frames.len()).sum();
            println!(
                "synth: {} sequences, {} frames -> {}",
                manifest.sequences.len(),
                frames,
                out.join("manifest.json").display()
            );
        }
        SynthCommand::Perturb {
            op,
            dataset,
            tracks,
            out,
        } => {
            let text = if op.trim_start().starts_with('{') {
                op
            } else {
                read_text(Path::new(&op))?
            };
            let op = PerturbOp::from_json(&text)?;
            match (dataset, tracks) {
                (Some(d), None) => {
                    synth::perturb_dataset(&load_dataset(&d)?, &op, &out)?;
                    println!("synth perturb: {} -> {}", op.name(), out.join("manifest.json").display());
                }
                (None, Some(t)) => {
                    let text = read_text(&t)?;
                    let mut tracked: TrackOutput = serde_json::from_str(&text).map_err(Error::from)?;
                    for pred in &mut tracked.sequences {
                        synth::perturb_prediction(pred, &op)?;
                    }
                    run_dir::write_json(&out, &tracked)?;
                    println!("synth perturb: {} -> {}", op.name(), out.display());
                }
                _ => return Err(CliError::Usage("perturb needs exactly one of --dataset or --tracks".into())),
            }
        }
    }
    Ok(())
}

fn detect(a: DetectArgs) -> Result<(), CliError> {
    let default = if a.tau == DEFAULT_TAU { " (default)" } else { "" };
    eprintln!("detect: tau={}{default} min-size={}", a.tau, a.min_size);
    let ds = load_dataset(&a.data.dataset)?;
    let out = pipeline::detect(&ds, a.tau, a.min_size)?;
    let segments: usize = out.sequences.iter().flat_map(|s| &s.frames).map(Vec::len).sum();
    let path = write_stage(&a.run.run, "detect", &out)?;
    println!("detect: {segments} segments -> {}", path.display());
    Ok(())
}

fn meta_train(a: MetaTrainArgs) -> Result<(), CliError> {
    let ds = load_dataset(&a.data.dataset)?;
    let det: DetectOutput = read_stage(&a.run.run, "detect")?;
    let seqs = pipeline::meta_sequences(&ds, &det.sequences)?;
    let train = match (a.protocol, &a.train_dataset) {
        (Protocol::M2, Some(p)) => {
            let other = load_dataset(p)?;
            let other_det = pipeline::detect(&other, det.tau, det.min_size)?;
            Some(pipeline::meta_sequences(&other, &other_det.sequences)?)
        }
        (Protocol::M2, None) => return Err(CliError::Usage("protocol M2 needs --train-dataset".into())),
        (Protocol::M1, Some(_)) => return Err(CliError::Usage("--train-dataset only applies to protocol M2".into())),
        (Protocol::M1, None) => None,
    };
    let outcome = run_protocol(&seqs, train.as_deref(), a.protocol, a.lambda, &TrainOptions::default())?;
    let out = MetaTrainOutput {
        schema_version: STAGE_SCHEMA_VERSION,
        outcome,
    };
    let path = write_stage(&a.run.run, "meta-train", &out)?;
    println!("meta-train: {} with {} models -> {}", a.protocol, out.outcome.models.len(), path.display());
    Ok(())
}

fn meta_apply(a: MetaApplyArgs) -> Result<(), CliError> {
    let ds = load_dataset(&a.data.dataset)?;
    let det: DetectOutput = read_stage(&a.run.run, "detect")?;
    let trained: MetaTrainOutput = read_stage(&a.run.run, "meta-train")?;
    let out = pipeline::meta_apply(&ds, &det, &trained.outcome)?;
    let count = |d: &DetectOutput| d.sequences.iter().flat_map(|s| &s.frames).map(Vec::len).sum::<usize>();
    let path = write_stage(&a.run.run, "meta-apply", &out)?;
    println!("meta-apply: kept {} of {} segments -> {}", count(&out), count(&det), path.display());
    Ok(())
}

fn track(a: TrackArgs) -> Result<(), CliError> {
    let det: DetectOutput = read_stage(&a.run.run, &a.from)?;
    let overrides = TrackerOverrides {
        aggregation_dist: a.aggregation_dist,
        center_dist: a.center_dist,
        min_iou: a.min_iou,
        regression_window: a.regression_window,
        max_gap: a.max_gap,
    };
    let out = pipeline::track(&det.sequences, &overrides, a.seed)?;
    let tracks: usize = out.sequences.iter().map(|s| s.tracks.len()).sum();
    let path = write_stage(&a.run.run, "track", &out)?;
    println!("track: {tracks} tracks -> {}", path.display());
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PointRow<'a> {
    x: f64,
    y: f64,
    cluster: Option<u32>,
    sequence_id: &'a str,
    frame_index: u32,
    segment_id: u32,
    track_id: u32,
    gt_class: Option<u16>,
    gt_instance: Option<u16>,
}

fn point_row(p: &EmbeddingPoint, cluster: Option<u32>) -> PointRow<'_> {
    PointRow {
        x: p.coords[0],
        y: p.coords[1],
        cluster,
        sequence_id: &p.origin.sequence_id,
        frame_index: p.origin.frame_index,
        segment_id: p.origin.segment_id,
        track_id: p.origin.track_id,
        gt_class: p.gt_class,
        gt_instance: p.gt_instance,
    }
}

fn embed(a: EmbedArgs) -> Result<(), CliError> {
    let ds = load_dataset(&a.data.dataset)?;
    let tracked: TrackOutput = read_stage(&a.run.run, "track")?;
    let mut cfg = RetrievalConfig {
        min_track_length: a.min_track_len,
        pca_dims: a.pca_dims,
        ..RetrievalConfig::default()
    };
    cfg.tsne.perplexity = a.perplexity;
    cfg.tsne.seed = a.seed;
    let out = pipeline::embed_tracks(&ds, &tracked.sequences, &cfg, a.features.as_deref())?;
    let path = write_stage(&a.run.run, "embed", &out)?;
    write_csv(&a.run.run.join("embedding.csv"), out.points.iter().map(|p| point_row(p, None)))?;
    println!("embed: {} points -> {}", out.points.len(), path.display());
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<(), CliError> {
    let emb: EmbedOutput = read_stage(&a.run.run, "embed")?;
    let cfg = DbscanConfig {
        epsilon: a.epsilon,
        min_pts: a.min_pts,
    };
    let out = pipeline::cluster(&emb, &cfg)?;
    let path = write_stage(&a.run.run, "cluster", &out)?;
    let asg = &out.assignment;
    write_csv(
        &a.run.run.join("clusters.csv"),
        asg.points.iter().zip(&asg.labels).map(|(p, l)| point_row(p, *l)),
    )?;
    let clusters = asg.labels.iter().flatten().collect::<std::collections::BTreeSet<_>>().len();
    println!(
        "cluster: eps={} min-pts={} -> {clusters} clusters, {} noise -> {}",
        a.epsilon,
        a.min_pts,
        asg.labels.iter().filter(|l| l.is_none()).count(),
        path.display()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let ds = load_dataset(&a.data.dataset)?;
    let run = &a.run.run;
    let any = a.pixel || a.segment || a.tracking || a.clustering;
    // Without explicit families, score whatever the run directory supports.
    let tracking = a.tracking || (!any && stage_path(run, "track").exists());
    let clustering = a.clustering || (!any && stage_path(run, "cluster").exists());
    let opts = EvaluateOptions {
        pixel: a.pixel || !any,
        segment: a.segment || !any,
        tracking,
        group_by: a.group_by,
        count_false_positive_class: a.count_fp_class,
        ..EvaluateOptions::default()
    };
    let needs_segments = opts.segment || opts.group_by.is_some();
    let segments: Option<DetectOutput> = match a.segments_from.as_str() {
        "track" => None,
        stage if needs_segments => Some(read_stage(run, stage)?),
        _ => None,
    };
    let tracks: Option<TrackOutput> = if tracking || (needs_segments && segments.is_none()) {
        Some(read_stage(run, "track")?)
    } else {
        None
    };
    let clusters: Option<ClusterOutput> = if clustering { Some(read_stage(run, "cluster")?) } else { None };
    let out = pipeline::evaluate(&ds, segments.as_ref(), tracks.as_ref(), clusters.as_ref(), &opts)?;
    let path = write_stage(run, "evaluate", &out)?;
    let mut parts = Vec::new();
    if let Some(p) = &out.pixel {
        parts.push(format!("auprc={:.4} fpr95={:.4}", p.auprc, p.fpr95));
    }
    if let Some(s) = &out.segment {
        parts.push(format!("f1_bar={:.4}", s.f1_bar));
    }
    if let Some(t) = &out.tracking {
        parts.push(format!("mota={:.4} mme={}", t.mota, t.mme));
    }
    if let Some(c) = &out.clustering {
        parts.push(format!("clusters={}", c.scores.clusters));
    }
    println!("evaluate: {} -> {}", parts.join(" "), path.display());
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Rows of an array of flat objects, columns in `header` order.
fn rows_of(items: Option<&Value>, header: &[&str]) -> Vec<Vec<String>> {
    items
        .and_then(Value::as_array)
        .map(|arr| {
            arr.iter()
                .map(|item| header.iter().map(|h| cell(item.get(*h).unwrap_or(&Value::Null))).collect())
                .collect()
        })
        .unwrap_or_default()
}

fn report(run: &Path) -> Result<(), CliError> {
    let mut stages = Map::new();
    for stage in run_dir::STAGES {
        let path = stage_path(run, stage);
        if path.exists() {
            stages.insert(stage.to_string(), read_stage::<Value>(run, stage)?);
        }
    }
    if stages.is_empty() {
        return Err(Error::io(run, std::io::Error::new(std::io::ErrorKind::NotFound, "no stage outputs in run directory")).into());
    }

    let mut summary = Vec::new();
    if let Some(eval) = stages.get("evaluate") {
        for (family, keys) in [
            ("pixel", &["auprc", "fpr95"][..]),
            ("segment", &["f1Bar"][..]),
            ("tracking", &["mota", "mmeRatio", "motp", "gtCount", "mt", "pt", "ml", "fp", "fn", "mme"][..]),
        ] {
            if let Some(section) = eval.get(family) {
                for k in keys {
                    summary.push(vec![family.to_string(), k.to_string(), cell(section.get(*k).unwrap_or(&Value::Null))]);
                }
            }
        }
        if let Some(scores) = eval.get("clustering").and_then(|c| c.get("scores")) {
            for k in ["csInst", "csImp", "csFrag", "classes", "clusters", "noise"] {
                summary.push(vec!["clustering".into(), k.into(), cell(scores.get(k).unwrap_or(&Value::Null))]);
            }
        }
        let kappa = ["kappa", "tp", "fn", "fp", "f1"];
        write_table(
            &run.join("report_segments.csv"),
            &kappa,
            &rows_of(eval.get("segment").and_then(|s| s.get("perKappa")), &kappa),
        )?;
        let objects = ["sequenceId", "instance", "occurrences", "matched", "trackedFraction", "coverage", "lt"];
        write_table(
            &run.join("report_objects.csv"),
            &objects,
            &rows_of(eval.get("tracking").and_then(|t| t.get("objects")), &objects),
        )?;
        let groups: Vec<Vec<String>> = eval
            .get("groups")
            .and_then(Value::as_array)
            .map(|gs| {
                gs.iter()
                    .map(|g| {
                        let px = |k: &str| g.get("pixel").and_then(|p| p.get(k)).map(cell).unwrap_or_default();
                        vec![
                            cell(g.get("group").unwrap_or(&Value::Null)),
                            cell(g.get("objectFrames").unwrap_or(&Value::Null)),
                            g.get("segment").and_then(|s| s.get("f1Bar")).map(cell).unwrap_or_default(),
                            px("auprc"),
                            px("fpr95"),
                        ]
                    })
                    .collect()
            })
            .unwrap_or_default();
        write_table(&run.join("report_groups.csv"), &["group", "objectFrames", "f1Bar", "auprc", "fpr95"], &groups)?;
    }
    write_table(&run.join("report_summary.csv"), &["family", "metric", "value"], &summary)?;

    let names: Vec<String> = stages.keys().cloned().collect();
    let doc = json!({
        "schemaVersion": STAGE_SCHEMA_VERSION,
        "stages": Value::Object(stages),
    });
    let path = run.join("report.json");
    run_dir::write_json(&path, &doc)?;
    println!("report: {} -> {}", names.join(", "), path.display());
    Ok(())
}
