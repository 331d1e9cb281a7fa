use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Evaluate line segment detectors and associators on RGB-D sequences.
///
/// Every flag of a subcommand can also come from a TOML file given with
/// `--config`: top-level keys apply to any subcommand that has a flag of
/// that name, keys under a `[<subcommand>]` table apply to that subcommand
/// only. Flags on the command line win over the file.
///
/// Exit status: 0 on success, 2 for invalid input, 3 when a computation
/// fails.
#[derive(Debug, Parser)]
#[command(name = "lineval", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vectorized detection metrics (P/R/F per threshold, AP and PR curve for scored detections).
    EvalDetection(EvalDetection),
    /// Pixel-level heatmap metrics (P^H/R^H/F^H, AP^H for scored detections).
    EvalHeatmap(EvalHeatmap),
    /// Depth-based repeatability and localization error between frames.
    EvalRepeatability(EvalRepeatability),
    /// Precision and recall of predicted line associations.
    EvalAssociation(EvalAssociation),
    /// Relative pose error of poses estimated from matched lines.
    EvalPose(EvalPose),
    /// Track, frame and line counts of an annotation file.
    Stats(Stats),
    /// Frames per second from per-frame timings.
    Fps(Fps),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EvalDetection(_) => "eval-detection",
            Command::EvalHeatmap(_) => "eval-heatmap",
            Command::EvalRepeatability(_) => "eval-repeatability",
            Command::EvalAssociation(_) => "eval-association",
            Command::EvalPose(_) => "eval-pose",
            Command::Stats(_) => "stats",
            Command::Fps(_) => "fps",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::EvalDetection(a) => &a.common,
            Command::EvalHeatmap(a) => &a.common,
            Command::EvalRepeatability(a) => &a.common,
            Command::EvalAssociation(a) => &a.common,
            Command::EvalPose(a) => &a.common,
            Command::Stats(a) => &a.common,
            Command::Fps(a) => &a.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file supplying flag values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report destination [default: standard output].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Report format [default: from the output extension, else json].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads [default: number of CPUs].
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Distance {
    Structural,
    Orthogonal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Normalization {
    /// Residuals in pixels: line coefficients scaled so that a² + b² = 1.
    Normal,
    /// Line coefficients scaled to unit norm.
    Full,
}

/// Comma-separated numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct List(pub Vec<f64>);

pub fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<Result<Vec<_>, _>>()
        .map(List)
}

/// `WIDTHxHEIGHT`.
pub fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<u32>().ok().filter(|v| *v > 0);
    match (parse(w), parse(h)) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(format!("expected positive WIDTHxHEIGHT, got '{s}'")),
    }
}

#[derive(Debug, Args)]
pub struct EvalDetection {
    /// Annotation JSON file.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Detection rows `frame_id x1 y1 x2 y2 [score]`.
    #[arg(long)]
    pub detections: PathBuf,
    /// Segment distance.
    #[arg(long, value_enum, default_value = "structural")]
    pub distance: Distance,
    /// Matching thresholds in pixels at the evaluation resolution.
    #[arg(long, value_parser = parse_list, default_value = "5,10")]
    pub dmax: List,
    /// Evaluation resolution.
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    pub resolution: (u32, u32),
    /// Size of the frames the coordinates refer to.
    #[arg(long, value_parser = parse_size, default_value = "640x480")]
    pub image_size: (u32, u32),
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalHeatmap {
    /// Annotation JSON file.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Detection rows `frame_id x1 y1 x2 y2 [score]`.
    #[arg(long)]
    pub detections: PathBuf,
    /// Pixel matching radius at the evaluation resolution [default: 1% of its diagonal].
    #[arg(long)]
    pub dmax: Option<f64>,
    /// Confidence thresholds swept for AP^H.
    #[arg(
        long,
        value_parser = parse_list,
        default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95"
    )]
    pub thresholds: List,
    /// Evaluation resolution.
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    pub resolution: (u32, u32),
    /// Size of the frames the coordinates refer to.
    #[arg(long, value_parser = parse_size, default_value = "640x480")]
    pub image_size: (u32, u32),
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Sequence {
    /// Directory of 16-bit `<frame_id>.png` depth images; its frames define the evaluated sequence.
    #[arg(long)]
    pub depth_dir: PathBuf,
    /// Trajectory rows `timestamp tx ty tz qx qy qz qw` (camera-to-world).
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Intrinsics JSON {fx, fy, cx, cy, width, height[, depth_scale]}.
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Rows `frame_id timestamp` mapping frames to trajectory rows [default: frame k is row k].
    #[arg(long)]
    pub timestamps: Option<PathBuf>,
    /// Raw depth units per meter, overriding the intrinsics file.
    #[arg(long)]
    pub depth_scale: Option<f64>,
    /// Allowed deviation of trajectory quaternion norms from 1.
    #[arg(long, default_value_t = 1e-6)]
    pub quaternion_tolerance: f64,
    /// Pair each frame with the one this many positions later.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub stride: u32,
}

#[derive(Debug, Args)]
pub struct EvalRepeatability {
    /// Detection rows `frame_id x1 y1 x2 y2 [score]`.
    #[arg(long)]
    pub detections: PathBuf,
    #[command(flatten)]
    pub sequence: Sequence,
    /// Segment distance.
    #[arg(long, value_enum, default_value = "structural")]
    pub distance: Distance,
    /// Thresholds in pixels at the evaluation resolution.
    #[arg(long, value_parser = parse_list, default_value = "5")]
    pub dmax: List,
    /// Evaluation resolution.
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    pub resolution: (u32, u32),
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalAssociation {
    /// Annotation JSON file.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Match rows `frame_i frame_j idx_i idx_j`, indexing annotated lines.
    #[arg(long)]
    pub matches: PathBuf,
    /// Pair each annotated frame with the one this many positions later.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub stride: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("lines").required(true).args(["annotations", "detections"]))]
pub struct EvalPose {
    /// Annotation JSON file providing the lines.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Detection rows providing the lines.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Match rows `frame_i frame_j idx_i idx_j`.
    #[arg(long)]
    pub matches: PathBuf,
    #[command(flatten)]
    pub sequence: Sequence,
    /// Maximum Levenberg-Marquardt iterations per solve.
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    /// Huber threshold on the residual norm.
    #[arg(long, default_value_t = 1.0)]
    pub huber_delta: f64,
    /// Stop when the update step norm falls below this.
    #[arg(long, default_value_t = 1e-10)]
    pub convergence_tol: f64,
    /// Initial damping.
    #[arg(long, default_value_t = 1e-3)]
    pub damping: f64,
    /// Scaling of the observed line coefficients.
    #[arg(long, value_enum, default_value = "normal")]
    pub normalization: Normalization,
    /// Residual thresholds of the outlier rejection rounds; empty disables rejection.
    #[arg(long, value_parser = parse_list, default_value = "20,10,5,2.5,1")]
    pub outlier_thresholds: List,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Stats {
    /// Annotation JSON file.
    #[arg(long)]
    pub annotations: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Fps {
    /// Rows `frame_id seconds`.
    #[arg(long)]
    pub timings: PathBuf,
    #[command(flatten)]
    pub common: Common,
}
