use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wordverify::calibration::CalibrationMode;
use wordverify::Combiner;

#[derive(Debug, Parser)]
#[command(name = "wordverify", version, about = "Spoken word verification against healthy-speaker templates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute MFCC feature containers for every clip in the manifests.
    Extract(ExtractArgs),
    /// Compute and cache posteriorgrams for every clip in the manifests.
    Infer(InferArgs),
    /// Turn template recordings into cached posteriorgrams.
    Enroll(EnrollArgs),
    /// Score and label naming attempts.
    Verify(VerifyArgs),
    /// Choose decision thresholds that maximise Pearson's r.
    Calibrate(CalibrateArgs),
    /// Per-patient k-fold cross-validation of the adapted threshold.
    Cv(CvArgs),
    /// Metrics, agreement and significance tests over a predictions table.
    Stats(StatsArgs),
    /// Time the per-attempt pipeline.
    Bench(BenchArgs),
    /// Generate a synthetic corpus with known ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// GRU weight file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub model: Option<PathBuf>,
    /// Synthetic posteriorgram spec (JSON) standing in for a model.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub attempts: PathBuf,
}

/// Either freshly computed distances or the results.csv of an earlier run.
#[derive(Debug, Args)]
pub struct ScoreInput {
    /// results.csv from `verify`; skips scoring.
    #[arg(long, conflicts_with_all = ["model", "synthetic", "templates", "attempts"])]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub attempts: Option<PathBuf>,
    #[arg(long, default_value_t = Combiner::Min)]
    pub combiner: Combiner,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub attempts: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub attempts: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Also write the feature containers under `<out-dir>/features`.
    #[arg(long)]
    pub dump_features: bool,
}

#[derive(Debug, Args)]
pub struct EnrollArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub manifests: ManifestArgs,
    #[arg(long, default_value_t = Combiner::Min)]
    pub combiner: Combiner,
    /// One threshold for every attempt.
    #[arg(long, conflicts_with = "calibration", required_unless_present = "calibration")]
    pub threshold: Option<f64>,
    /// calibration.json with per-patient thresholds.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Column name for this run in predictions.csv.
    #[arg(long, default_value = "system")]
    pub system_name: String,
    #[arg(long)]
    pub dump_features: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub input: ScoreInput,
    #[arg(long, default_value_t = CalibrationMode::Adapted)]
    pub mode: CalibrationMode,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: ScoreInput,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub seed: u64,
    /// Deal each class round-robin over the folds.
    #[arg(long)]
    pub stratified: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub manifests: ManifestArgs,
    #[arg(long, default_value_t = Combiner::Min)]
    pub combiner: Combiner,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Untimed passes before measuring.
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    /// timings.csv of another run; adds a paired Wilcoxon test.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub patients: usize,
    #[arg(long, default_value_t = 100)]
    pub words: usize,
    #[arg(long, default_value_t = 2)]
    pub templates_per_word: usize,
    #[arg(long, default_value_t = 0.95)]
    pub template_peak: f64,
    #[arg(long, default_value_t = 0.95)]
    pub attempt_peak: f64,
    /// Probability that an attempt is a correct naming.
    #[arg(long, default_value_t = 0.5)]
    pub correct_rate: f64,
    /// Also write a small random GRU weight file.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}
