use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use lineval::eval::{
    evaluate_association, evaluate_detection, evaluate_fps, evaluate_heatmap, evaluate_pose, evaluate_repeatability,
    evaluate_stats, AssociationSettings, DetectionSettings, HeatmapSettings, PoseSettings, RepeatabilitySettings,
};
use lineval::io::{
    load_annotations, load_detections, load_frame_timestamps, load_intrinsics, load_matches, load_timings,
    load_trajectory_with_tolerance, DepthDir, FrameMapping, Report, ReportFormat, Trajectory,
};
use lineval::pose::{LineNormalization, SolverConfig};
use lineval::{CameraModel, DistanceKind, LineSegment2D};

use crate::args::{Cli, Command, Common, Distance, Format, Normalization, Sequence};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_COMPUTATION: u8 = 3;

/// Computation failures get their own code; everything else, including
/// unreadable or inconsistent files, counts as an input error.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<lineval::Error>()) {
        Some(e) if !e.is_input_error() => EXIT_COMPUTATION,
        _ => EXIT_INPUT,
    }
}

fn distance(d: Distance) -> DistanceKind {
    match d {
        Distance::Structural => DistanceKind::Structural,
        Distance::Orthogonal => DistanceKind::Orthogonal,
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

struct LoadedSequence {
    camera: CameraModel,
    depth: DepthDir,
    trajectory: Trajectory,
    mapping: FrameMapping,
}

fn load_sequence(s: &Sequence, report_meta: &mut Vec<(String, String)>) -> Result<LoadedSequence> {
    let mut camera = load_intrinsics(&s.intrinsics)?;
    if let Some(scale) = s.depth_scale {
        camera.depth_scale = scale;
        camera.validate()?;
    }
    let depth = DepthDir::open(&s.depth_dir, &camera)?;
    let trajectory = load_trajectory_with_tolerance(&s.trajectory, s.quaternion_tolerance)?;
    let mapping = match &s.timestamps {
        Some(p) => load_frame_timestamps(p)?,
        None => FrameMapping::Positional,
    };
    report_meta.push(("input.depth_dir".into(), path_str(&s.depth_dir)));
    report_meta.push(("input.trajectory".into(), path_str(&s.trajectory)));
    report_meta.push(("input.intrinsics".into(), path_str(&s.intrinsics)));
    if let Some(p) = &s.timestamps {
        report_meta.push(("input.timestamps".into(), path_str(p)));
    }
    report_meta.push(("quaternion_tolerance".into(), s.quaternion_tolerance.to_string()));
    Ok(LoadedSequence {
        camera,
        depth,
        trajectory,
        mapping,
    })
}

fn evaluate(command: &Command) -> Result<Report> {
    let mut meta: Vec<(String, String)> = Vec::new();
    let mut report = match command {
        Command::EvalDetection(a) => {
            let annotation = load_annotations(&a.annotations)?;
            let detections = load_detections(&a.detections)?;
            meta.push(("input.annotations".into(), path_str(&a.annotations)));
            meta.push(("input.detections".into(), path_str(&a.detections)));
            let settings = DetectionSettings {
                distance: distance(a.distance),
                d_max: a.dmax.0.clone(),
                eval_resolution: a.resolution,
                image_size: a.image_size,
            };
            evaluate_detection(&annotation, &detections, &settings)?
        }
        Command::EvalHeatmap(a) => {
            let annotation = load_annotations(&a.annotations)?;
            let detections = load_detections(&a.detections)?;
            meta.push(("input.annotations".into(), path_str(&a.annotations)));
            meta.push(("input.detections".into(), path_str(&a.detections)));
            let settings = HeatmapSettings {
                d_max: a.dmax,
                thresholds: a.thresholds.0.clone(),
                eval_resolution: a.resolution,
                image_size: a.image_size,
            };
            evaluate_heatmap(&annotation, &detections, &settings)?
        }
        Command::EvalRepeatability(a) => {
            let detections = load_detections(&a.detections)?;
            meta.push(("input.detections".into(), path_str(&a.detections)));
            let seq = load_sequence(&a.sequence, &mut meta)?;
            let settings = RepeatabilitySettings {
                distance: distance(a.distance),
                d_max: a.dmax.0.clone(),
                eval_resolution: a.resolution,
                stride: a.sequence.stride as usize,
                mapping: seq.mapping,
            };
            evaluate_repeatability(&detections, &seq.depth, &seq.trajectory, &seq.camera, &settings)?
        }
        Command::EvalAssociation(a) => {
            let annotation = load_annotations(&a.annotations)?;
            let matches = load_matches(&a.matches)?;
            meta.push(("input.annotations".into(), path_str(&a.annotations)));
            meta.push(("input.matches".into(), path_str(&a.matches)));
            evaluate_association(
                &annotation,
                &matches,
                &AssociationSettings {
                    stride: a.stride as usize,
                },
            )?
        }
        Command::EvalPose(a) => {
            let lines: BTreeMap<u64, Vec<LineSegment2D>> = match (&a.annotations, &a.detections) {
                (Some(p), _) => {
                    meta.push(("input.annotations".into(), path_str(p)));
                    load_annotations(p)?
                        .frames()
                        .iter()
                        .map(|f| (f.frame_id, f.lines.clone()))
                        .collect()
                }
                (None, Some(p)) => {
                    meta.push(("input.detections".into(), path_str(p)));
                    load_detections(p)?.frames
                }
                (None, None) => unreachable!("clap requires one line source"),
            };
            let matches = load_matches(&a.matches)?;
            meta.push(("input.matches".into(), path_str(&a.matches)));
            let seq = load_sequence(&a.sequence, &mut meta)?;
            let solver = SolverConfig {
                max_iterations: a.max_iterations,
                huber_delta: a.huber_delta,
                convergence_tol: a.convergence_tol,
                damping: a.damping,
                normalization: match a.normalization {
                    Normalization::Normal => LineNormalization::Normal,
                    Normalization::Full => LineNormalization::Full,
                },
                outlier_thresholds: a.outlier_thresholds.0.clone(),
                ..SolverConfig::default()
            };
            let settings = PoseSettings {
                stride: a.sequence.stride as usize,
                solver,
                mapping: seq.mapping,
            };
            evaluate_pose(&lines, &matches, &seq.depth, &seq.trajectory, &seq.camera, &settings)?
        }
        Command::Stats(a) => {
            meta.push(("input.annotations".into(), path_str(&a.annotations)));
            evaluate_stats(&load_annotations(&a.annotations)?)
        }
        Command::Fps(a) => {
            meta.push(("input.timings".into(), path_str(&a.timings)));
            evaluate_fps(&load_timings(&a.timings)?)?
        }
    };
    for (k, v) in meta {
        report.meta(k, v);
    }
    report.meta("lineval_version", env!("CARGO_PKG_VERSION"));
    Ok(report)
}

fn output_format(common: &Common) -> ReportFormat {
    match common.format {
        Some(Format::Json) => ReportFormat::Json,
        Some(Format::Csv) => ReportFormat::Csv,
        None => common
            .output
            .as_deref()
            .and_then(ReportFormat::from_path)
            .unwrap_or(ReportFormat::Json),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let common = cli.command.common();
    let report = match common.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .context("starting worker pool")?
            .install(|| evaluate(&cli.command)),
        None => evaluate(&cli.command),
    }
    .with_context(|| format!("{} failed", cli.command.name()))?;

    let format = output_format(common);
    match &common.output {
        Some(path) => report.write(path, format)?,
        None => {
            let text = report.encode(format)?;
            std::io::stdout().lock().write_all(text.as_bytes()).context("writing report")?;
        }
    }
    Ok(())
}
