//! `poselift` command-line tool.
//!
//! Exit status: 0 success, 1 solver failure, 2 usage or configuration error,
//! 3 I/O or parse error. Failures print one JSON object to stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use poselift::eval::CameraMode;
use poselift::plot::PlotKind;
use poselift::{Error, InitMode, VariantConfig};

#[derive(Parser, Debug)]
#[command(name = "poselift", version, about = "Lift 2D human joints to 3D poses with sparse bases")]
pub struct Cli {
    /// JSON run configuration. Missing keys take their defaults, unknown keys are rejected.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice. Overrides `seed` and `dictionary.seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn a pose basis (PCA, classwise PCA or sparse dictionary) from 3D poses.
    LearnBases(LearnArgs),
    /// Recover 3D poses from 2D joints.
    Lift(LiftArgs),
    /// Estimate a weak-perspective camera from paired 2D and 3D poses.
    EstimateCamera(CameraArgs),
    /// Median 3D error against Gaussian 2D noise level.
    EvalNoise(NoiseArgs),
    /// 3D error as the subject rotates about the vertical axis.
    EvalViewpoint(ViewpointArgs),
    /// All variants on one corpus, optionally with outliers or noise.
    EvalGrid(GridArgs),
    /// Draw synthetic poses, cameras and projections.
    GenSynthetic(SynthArgs),
    /// Redraw an SVG chart from a record CSV.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    /// 3D training poses (JSON or CSV). Classwise PCA needs labels.
    #[arg(long, value_name = "FILE")]
    pub poses: PathBuf,
    /// Output dictionary JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// pca, classwise-pca or sparse.
    #[arg(long, default_value = "sparse")]
    pub method: String,
    /// Number of bases (per class for classwise PCA). Sparse defaults to `dictionary.k`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Sparsity weight for dictionary learning. Overrides `dictionary.theta`.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Dictionary learning epochs. Overrides `dictionary.epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct StartArgs {
    /// Start poses for camera estimation: the basis mean, or k-means centers of `--clusters`.
    #[arg(long, default_value = "mean")]
    pub init: InitMode,
    /// 3D poses to cluster for `--init clusters`.
    #[arg(long, value_name = "FILE")]
    pub clusters: Option<PathBuf>,
    /// Number of k-means centers.
    #[arg(long, default_value_t = 30)]
    pub n_clusters: usize,
    /// Cap on camera/pose alternations. Overrides `alternation.max_outer`.
    #[arg(long)]
    pub outer_max: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    /// 2D joints (JSON or CSV), one pose or a batch.
    #[arg(long, value_name = "FILE")]
    pub pose2d: PathBuf,
    /// Dictionary JSON from `learn-bases`.
    #[arg(long, value_name = "FILE")]
    pub basis: PathBuf,
    /// Output JSON: one result object, or an array for a batch.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Known camera JSON. Without it the camera is estimated by alternation.
    #[arg(long, value_name = "FILE")]
    pub camera: Option<PathBuf>,
    /// L1WAWS (full method) or a baseline such as L2NANS.
    #[arg(long, default_value = "L1WAWS")]
    pub variant: VariantConfig,
    /// Sparsity weight. Overrides `theta` in the config.
    #[arg(long)]
    pub theta: Option<f64>,
    #[command(flatten)]
    pub start: StartArgs,
}

#[derive(Args, Debug)]
pub struct CameraArgs {
    /// 2D joints (JSON or CSV).
    #[arg(long, value_name = "FILE")]
    pub pose2d: PathBuf,
    /// 3D poses paired with `--pose2d`, same count.
    #[arg(long, value_name = "FILE")]
    pub pose3d: PathBuf,
    /// Output JSON: camera and diagnostics, or an array for a batch.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Dictionary JSON from `learn-bases`.
    #[arg(long, value_name = "FILE")]
    pub basis: PathBuf,
    /// Per-trial record CSV. A summary CSV and manifests are written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Instance JSON from `gen-synthetic`. Without it `--count` instances are drawn from the seed.
    #[arg(long, value_name = "FILE")]
    pub instances: Option<PathBuf>,
    /// Number of synthetic instances when `--instances` is absent.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Summary CSV path. Defaults to `<out stem>.summary.csv`.
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
    /// known: lift with the true camera. estimated: alternate camera and pose.
    #[arg(long, default_value = "known")]
    pub camera_mode: CameraMode,
    /// Comma-separated variants. Defaults to all eight.
    #[arg(long, value_delimiter = ',')]
    pub variants: Vec<VariantConfig>,
    /// Sparsity weight. Overrides `theta` in the config.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Choose among starts by ground-truth error rather than reprojection.
    #[arg(long)]
    pub select_by_truth: bool,
    /// Also write an SVG chart of the records.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub start: StartArgs,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Comma-separated noise levels in 1..=10.
    #[arg(long, value_delimiter = ',', default_values_t = (1..=poselift::eval::NOISE_LEVELS).collect::<Vec<u32>>())]
    pub levels: Vec<u32>,
}

#[derive(Args, Debug)]
pub struct ViewpointArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Comma-separated rotation angles in degrees.
    #[arg(long, value_delimiter = ',', default_values_t = (0..12).map(|i| 30.0 * i as f64).collect::<Vec<f64>>())]
    pub angles: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Corrupt one joint per instance by an offset of 0.5 to 1.0.
    #[arg(long, conflicts_with = "noise_level")]
    pub outliers: bool,
    /// Add Gaussian 2D noise at this level (1..=10).
    #[arg(long)]
    pub noise_level: Option<u32>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of instances.
    #[arg(long)]
    pub count: usize,
    /// Instance JSON (3D pose, camera, projection, label per instance).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write the 3D poses with labels (JSON or CSV by extension).
    #[arg(long, value_name = "FILE")]
    pub poses3d: Option<PathBuf>,
    /// Also write the 2D projections (JSON or CSV by extension).
    #[arg(long, value_name = "FILE")]
    pub poses2d: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Record CSV from an `eval-*` command.
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    /// Output SVG.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// error (median error per condition) or cumulative.
    #[arg(long, default_value = "error")]
    pub kind: PlotKind,
    #[arg(long, default_value = "")]
    pub title: String,
    /// Label of the condition axis.
    #[arg(long, default_value = "condition")]
    pub x_label: String,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn kind_and_code(&self) -> (&'static str, u8) {
        match self {
            Failure::Usage(_) => ("usage", 2),
            Failure::Core(e) => match e {
                Error::Config(_) => ("config", 2),
                Error::Io(_) => ("io", 3),
                Error::Parse { .. } | Error::Schema(_) | Error::Dimension(_) | Error::Data(_) => ("parse", 3),
                Error::DegeneratePose(_)
                | Error::Frame(_)
                | Error::CodingNotConverged { .. }
                | Error::SingularGeometry(_)
                | Error::CameraNotConverged(_)
                | Error::Pipeline(_) => ("solver", 1),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message.trim() });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("POSELIFT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("POSELIFT_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot build thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => fail("usage", &e.to_string(), 2),
            };
        }
    };
    match configure_threads().and_then(|()| commands::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, code) = f.kind_and_code();
            fail(kind, &f.message(), code)
        }
    }
}
