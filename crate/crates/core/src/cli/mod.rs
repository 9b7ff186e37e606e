//! The `modewise` command line. [`run`] parses arguments, runs one
//! subcommand on a rayon pool of `--jobs` workers and returns the exit
//! code: 0 ok, 1 usage, 2 data error, 3 numeric failure.
//!
//! Every command that writes an artifact also writes
//! `<artifact>.manifest.json` (see [`RunManifest`]).

mod manifest;

pub use manifest::{file_digest, manifest_path, now_rfc3339, sha256_hex, InputDigest, RunManifest};

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{self, ModeLabel};
use crate::nn::{read_tmmd_file, write_tmmd_file, AdamConfig, Network};
use crate::pipeline::{self, Caps, PipelineConfig};
use crate::seed::{self, stream};
use crate::synth::{self, SynthConfig};
use crate::train::{self, BaselineAlgo, Classifier, EarlyStop, TrainConfig};
use crate::zoo::{self, Ensemble, ZooOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "modewise",
    version,
    about = "Transportation mode inference from GPS trajectories"
)]
pub struct Cli {
    /// Worker threads for parallel stages. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parse a GeoLife directory tree into labelled trips (JSON lines).
    Ingest(IngestArgs),
    /// Clean, smooth and chunk trips into a TMSG dataset.
    Preprocess(PreprocessArgs),
    /// Seeded train/test split of a dataset.
    Split(SplitArgs),
    /// Train one network.
    Train(TrainArgs),
    /// Train a bagged ensemble, one TMMD file per member.
    EnsembleTrain(EnsembleArgs),
    /// Score a model file or ensemble directory on a dataset.
    Evaluate(EvaluateArgs),
    /// Cross-validated grid over the two dropout rates.
    GridsearchDropout(GridArgs),
    /// KNN or decision tree on the hand-crafted features.
    Baseline(BaselineArgs),
    /// Label the chunks of an unlabelled .plt track.
    Predict(PredictArgs),
    /// Generate labelled synthetic trips.
    Synth(SynthArgs),
    /// Inspect the reference architectures.
    Spec {
        #[command(subcommand)]
        action: SpecAction,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecAction {
    /// Print the layer list of one architecture as JSON.
    Show(ShowArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Root holding `Data/<user>/Trajectory/*.plt`, or the user directories
    /// themselves.
    #[arg(long)]
    pub geolife_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Time gap that splits a trip, seconds.
    #[arg(long, default_value_t = ingest::TRIP_GAP_S)]
    pub gap_s: f64,
    /// The same gap in minutes.
    #[arg(long, conflicts_with = "gap_s")]
    pub max_gap_min: Option<f64>,
}

impl IngestArgs {
    fn gap_seconds(&self) -> f64 {
        self.max_gap_min.map_or(self.gap_s, |m| m * 60.0)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 200)]
    pub segment_len: usize,
    /// Shortest segment or trailing chunk that is kept.
    #[arg(long, default_value_t = 10)]
    pub min_points: usize,
    #[arg(long, default_value_t = 9)]
    pub sg_window: usize,
    #[arg(long, default_value_t = 3)]
    pub sg_order: usize,
    /// Fold bearing differences into [0, 180].
    #[arg(long)]
    pub wrap_bearing: bool,
    /// Skip the hand-crafted feature sidecar.
    #[arg(long)]
    pub no_features: bool,
}

impl PipelineArgs {
    pub fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            segment_len: self.segment_len,
            min_points: self.min_points,
            sg_window: self.sg_window,
            sg_order: self.sg_order,
            ..PipelineConfig::default()
        };
        cfg.kinematics.wrap_bearing = self.wrap_bearing;
        if self.no_features {
            cfg.handcrafted = None;
        }
        cfg
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, visible_alias = "split", default_value_t = 0.8)]
    pub frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_train: PathBuf,
    #[arg(long)]
    pub out_test: PathBuf,
}

fn parse_filters(s: &str) -> std::result::Result<[usize; 4], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [a, b, c, d] if v.iter().all(|&f| f > 0) => Ok([a, b, c, d]),
        _ => Err(format!("expected four positive filter counts, got {s:?}")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Architecture, A to I.
    #[arg(long, default_value = "G")]
    pub config: String,
    /// Filter counts of the four convolution groups.
    #[arg(long, value_parser = parse_filters, default_value = "32,64,128,256")]
    pub filters: [usize; 4],
    #[arg(long, default_value_t = 0.5)]
    pub p_conv: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_fc: f64,
    /// Max-pool stride; 1 gives overlapping pools.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=2))]
    pub pool_stride: u32,
}

impl ModelArgs {
    fn options(&self, segment_len: usize) -> ZooOptions {
        ZooOptions {
            segment_len,
            filters: self.filters,
            p_conv: self.p_conv,
            p_fc: self.p_fc,
            pool_stride: self.pool_stride as usize,
            ..ZooOptions::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Accuracy curve that picks the kept epoch: val, test or none.
    #[arg(long, default_value = "val")]
    pub early_stop_on: EarlyStop,
    /// Stop after this many epochs without improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Share of the training set carved off for `--early-stop-on val`.
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
}

impl FitArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.epochs,
            early_stop: self.early_stop_on,
            patience: self.patience,
            seed: self.seed,
            val_fraction: self.val_fraction,
            adam: AdamConfig {
                lr: self.lr,
                ..AdamConfig::default()
            },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out set, required for `--early-stop-on test`.
    #[arg(long)]
    pub monitor: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Training report (JSON); printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 7)]
    pub n: usize,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// A TMMD file or a directory of ensemble members.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value = "G")]
    pub config: String,
    #[arg(long, value_parser = parse_filters, default_value = "32,64,128,256")]
    pub filters: [usize; 4],
    /// Dropout rates after convolution groups: `start:end:step`, a list or
    /// one value.
    #[arg(long, default_value = "0.2:0.8:0.1")]
    pub grid: String,
    /// Rates after hidden FC layers; defaults to `--grid`.
    #[arg(long)]
    pub grid_fc: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Every fit runs all epochs; the early-stop flags are ignored.
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub algo: BaselineAlgo,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Pick k or the depth by cross-validation on the training set.
    #[arg(long)]
    pub search: bool,
    /// k or max depth when not searching.
    #[arg(long)]
    pub param: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub plt: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub min_points: usize,
    #[arg(long)]
    pub wrap_bearing: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub per_mode: usize,
    /// Points per track.
    #[arg(long, default_value_t = 450)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Put one speed spike in every track.
    #[arg(long)]
    pub noise: bool,
    /// Radius of the position error on every fix, meters.
    #[arg(long, default_value_t = synth::DEFAULT_JITTER_M)]
    pub jitter_m: f64,
    /// JSON-lines output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ShowArgs {
    pub name: String,
    #[arg(long, default_value_t = 200)]
    pub segment_len: usize,
    #[arg(long, value_parser = parse_filters, default_value = "32,64,128,256")]
    pub filters: [usize; 4],
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MODEWISE_LOG", "warn")).try_init();
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return EXIT_USAGE;
    }
    let ctx = Ctx {
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        jobs: cli.jobs,
        started_at: now_rfc3339(),
    };
    let outcome = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))
        .and_then(|pool| pool.install(|| execute(&cli.command, &ctx)));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownConfig { .. } => Failure::Usage(e.to_string()),
            e => Failure::Run(e),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Run(e) if e.is_numeric() => EXIT_NUMERIC,
            Failure::Run(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Ctx {
    argv: Vec<String>,
    jobs: usize,
    started_at: String,
}

impl Ctx {
    /// Write one manifest next to each output.
    fn record(&self, cmd: &Command, seeds: &[(&str, u64)], inputs: &[&Path], outputs: &[PathBuf]) -> Result<()> {
        let config = serde_json::to_value(cmd)?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command_line: self.argv.clone(),
            config_hash: sha256_hex(&serde_json::to_vec(&config)?),
            config,
            seeds: seeds
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect::<BTreeMap<_, _>>(),
            inputs: inputs.iter().map(|p| file_digest(p)).collect::<Result<_>>()?,
            outputs: outputs.to_vec(),
            jobs: self.jobs,
            started_at: self.started_at.clone(),
            finished_at: now_rfc3339(),
        };
        for out in outputs {
            manifest.write_for(out)?;
        }
        Ok(())
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

enum LoadedModel {
    Single(Network),
    Ensemble(Ensemble),
}

impl LoadedModel {
    fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Ok(LoadedModel::Ensemble(Ensemble::load_dir(path)?))
        } else {
            Ok(LoadedModel::Single(read_tmmd_file(path)?))
        }
    }

    fn classifier(&self) -> &dyn Classifier {
        match self {
            LoadedModel::Single(n) => n,
            LoadedModel::Ensemble(e) => e,
        }
    }

    fn input_len(&self) -> usize {
        match self {
            LoadedModel::Single(n) => n.input_len(),
            LoadedModel::Ensemble(e) => e.input_len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkPrediction {
    pub index: usize,
    pub start_t: f64,
    pub end_t: f64,
    pub points: usize,
    pub label: u8,
    pub mode: ModeLabel,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictReport {
    pub input_points: usize,
    pub chunks: Vec<ChunkPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SpecView {
    name: String,
    in_channels: usize,
    segment_len: usize,
    layers: Vec<zoo::LayerSpec>,
    hidden_widths: Vec<usize>,
    param_count: usize,
}

fn read_dataset(path: &Path) -> Result<pipeline::Dataset> {
    pipeline::read_dataset_file(path)
}

/// Dataset files plus their feature sidecars.
fn dataset_outputs(sets: &[(&PathBuf, &pipeline::Dataset)]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for (path, ds) in sets {
        out.push(path.to_path_buf());
        if ds.features.is_some() {
            out.push(pipeline::features_sidecar(path));
        }
    }
    out
}

fn with_report(mut outputs: Vec<PathBuf>, report: &Option<PathBuf>) -> Vec<PathBuf> {
    outputs.extend(report.iter().cloned());
    outputs
}

fn execute(cmd: &Command, ctx: &Ctx) -> CliResult<()> {
    match cmd {
        Command::Ingest(a) => {
            let (trips, stats) = ingest::load_geolife_dir(&a.geolife_dir, a.gap_seconds())?;
            ingest::write_trips_file(&a.out, &trips)?;
            write_json(&stats, None)?;
            ctx.record(cmd, &[], &[&a.geolife_dir], std::slice::from_ref(&a.out))?;
        }
        Command::Preprocess(a) => {
            let trips = ingest::read_trips_file(&a.input)?;
            let (ds, stats) = pipeline::build_dataset_with_stats(&trips, &a.pipeline.config())?;
            pipeline::write_dataset_file(&a.out, &ds)?;
            write_json(&stats, None)?;
            ctx.record(cmd, &[], &[&a.input], &dataset_outputs(&[(&a.out, &ds)]))?;
        }
        Command::Split(a) => {
            let ds = read_dataset(&a.input)?;
            let (tr, te) = pipeline::split_train_test(&ds, a.frac, a.seed)?;
            pipeline::write_dataset_file(&a.out_train, &tr)?;
            pipeline::write_dataset_file(&a.out_test, &te)?;
            println!("train {} test {}", tr.len(), te.len());
            let seeds = [("seed", a.seed), ("split", seed::derive(a.seed, stream::SPLIT, 0))];
            let outputs = dataset_outputs(&[(&a.out_train, &tr), (&a.out_test, &te)]);
            ctx.record(cmd, &seeds, &[&a.input], &outputs)?;
        }
        Command::Train(a) => {
            let (train_ds, monitor) = load_training(a)?;
            let spec = zoo::build_config(&a.model.config, &a.model.options(train_ds.segment_len))?;
            let out = train::train(&spec, &train_ds, monitor.as_ref(), &a.fit.config())?;
            write_tmmd_file(&a.out, &out.network)?;
            write_json(&out.report, a.report.as_deref())?;
            let mut inputs = vec![a.train.as_path()];
            inputs.extend(a.monitor.as_deref());
            ctx.record(
                cmd,
                &[("seed", a.fit.seed)],
                &inputs,
                &with_report(vec![a.out.clone()], &a.report),
            )?;
        }
        Command::EnsembleTrain(e) => {
            let a = &e.train;
            let (train_ds, monitor) = load_training(a)?;
            let spec = zoo::build_config(&a.model.config, &a.model.options(train_ds.segment_len))?;
            let (ens, reports) = train::train_ensemble(&spec, &train_ds, monitor.as_ref(), e.n, &a.fit.config())?;
            ens.save_dir(&a.out)?;
            write_json(&reports, a.report.as_deref())?;
            let member_seeds: Vec<(String, u64)> = (0..e.n)
                .map(|i| {
                    (
                        format!("member_{i:02}"),
                        seed::derive(a.fit.seed, stream::MEMBER, i as u64),
                    )
                })
                .collect();
            let mut seeds: Vec<(&str, u64)> = vec![("seed", a.fit.seed)];
            seeds.extend(member_seeds.iter().map(|(k, v)| (k.as_str(), *v)));
            let mut inputs = vec![a.train.as_path()];
            inputs.extend(a.monitor.as_deref());
            ctx.record(cmd, &seeds, &inputs, &with_report(vec![a.out.clone()], &a.report))?;
        }
        Command::Evaluate(a) => {
            let model = LoadedModel::load(&a.model)?;
            let test = read_dataset(&a.test)?;
            let report = train::evaluate(model.classifier(), &test)?;
            println!("{}", report.to_table());
            if let Some(p) = &a.report {
                write_json(&report, Some(p))?;
                ctx.record(cmd, &[], &[&a.model, &a.test], std::slice::from_ref(p))?;
            }
        }
        Command::GridsearchDropout(a) => {
            let p_conv = train::parse_grid(&a.grid).map_err(|e| Failure::Usage(e.to_string()))?;
            let p_fc = match &a.grid_fc {
                Some(g) => train::parse_grid(g).map_err(|e| Failure::Usage(e.to_string()))?,
                None => p_conv.clone(),
            };
            let train_ds = read_dataset(&a.train)?;
            let opts = ZooOptions {
                segment_len: train_ds.segment_len,
                filters: a.filters,
                ..ZooOptions::default()
            };
            let res =
                train::grid_search_dropout(&a.config, &opts, &train_ds, &p_conv, &p_fc, a.folds, &a.fit.config())?;
            write_json(&res, a.report.as_deref())?;
            if let Some(p) = &a.report {
                eprintln!("best p_conv {} p_fc {}", res.best_p_conv, res.best_p_fc);
                ctx.record(cmd, &[("seed", a.fit.seed)], &[&a.train], std::slice::from_ref(p))?;
            }
        }
        Command::Baseline(a) => {
            let tr = read_dataset(&a.train)?;
            let te = read_dataset(&a.test)?;
            let res = train::run_baseline(a.algo, &tr, &te, a.search, a.param, a.folds, a.seed)?;
            println!("{:?} param {}\n{}", a.algo, res.param, res.eval.to_table());
            if let Some(p) = &a.report {
                write_json(&res, Some(p))?;
                ctx.record(cmd, &[("seed", a.seed)], &[&a.train, &a.test], std::slice::from_ref(p))?;
            }
        }
        Command::Predict(a) => {
            let model = LoadedModel::load(&a.model)?;
            let report = predict_track(&model, a)?;
            write_json(&report, a.report.as_deref())?;
            if let Some(p) = &a.report {
                ctx.record(cmd, &[], &[&a.model, &a.plt], std::slice::from_ref(p))?;
            }
        }
        Command::Synth(a) => {
            let cfg = SynthConfig {
                noise: a.noise,
                jitter_m: a.jitter_m,
                ..SynthConfig::new(a.per_mode, a.points, a.seed)
            };
            let trips = synth::generate(&cfg).trips();
            match &a.out {
                Some(p) => {
                    ingest::write_trips_file(p, &trips)?;
                    ctx.record(cmd, &[("seed", a.seed)], &[], std::slice::from_ref(p))?;
                }
                None => ingest::write_trips(io::stdout().lock(), &trips)?,
            }
        }
        Command::Spec {
            action: SpecAction::Show(a),
        } => {
            let opts = ZooOptions {
                segment_len: a.segment_len,
                filters: a.filters,
                ..ZooOptions::default()
            };
            let spec = zoo::build_config(&a.name, &opts)?;
            let view = SpecView {
                hidden_widths: spec.hidden_widths(),
                param_count: spec.param_count()?,
                name: spec.name,
                in_channels: spec.in_channels,
                segment_len: spec.segment_len,
                layers: spec.layers,
            };
            write_json(&view, None)?;
        }
    }
    Ok(())
}

fn load_training(a: &TrainArgs) -> CliResult<(pipeline::Dataset, Option<pipeline::Dataset>)> {
    if a.fit.early_stop_on == EarlyStop::Test && a.monitor.is_none() {
        return Err(Failure::Usage("--early-stop-on test needs --monitor".into()));
    }
    let train_ds = read_dataset(&a.train)?;
    let monitor = a.monitor.as_deref().map(read_dataset).transpose()?;
    Ok((train_ds, monitor))
}

fn predict_track(model: &LoadedModel, a: &PredictArgs) -> Result<PredictReport> {
    let text = fs::read_to_string(&a.plt).map_err(|e| Error::io(&a.plt, e))?;
    let points = ingest::parse_plt(&text).items;
    let mut cfg = PipelineConfig {
        segment_len: model.input_len(),
        min_points: a.min_points,
        ..PipelineConfig::default()
    };
    cfg.kinematics.wrap_bearing = a.wrap_bearing;
    let chunks = pipeline::track_chunks(&points, Caps::GLOBAL, &cfg)?;
    if chunks.is_empty() {
        return Err(Error::NoUsableSegments);
    }
    let batch = zoo::stack_batch(&chunks.iter().map(|c| &c.sample).collect::<Vec<_>>())?;
    let probs = model.classifier().predict_proba(&batch)?;
    let chunks = chunks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let row = probs.row(i).to_vec();
            let label = zoo::argmax(&row) as u8;
            ChunkPrediction {
                index: i,
                start_t: c.start_t,
                end_t: c.end_t,
                points: c.points,
                label,
                mode: ModeLabel::from_code(label).expect("one output per class"),
                probabilities: row,
            }
        })
        .collect();
    Ok(PredictReport {
        input_points: points.len(),
        chunks,
    })
}
