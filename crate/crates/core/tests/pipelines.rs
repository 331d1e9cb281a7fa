mod common;

use std::collections::BTreeMap;

use common::rng;
use common::scene::{self, SceneOptions};
use lineval::eval::{
    evaluate_association, evaluate_detection, evaluate_heatmap, evaluate_pose, evaluate_repeatability,
    AssociationSettings, DetectionSettings, HeatmapSettings, PoseSettings, RepeatabilitySettings,
};
use lineval::io::Detections;
use lineval::LineSegment2D;

fn exact_sequence(seed: u64) -> scene::Sequence {
    scene::sequence(
        &mut rng(seed),
        &SceneOptions {
            frames: 6,
            max_step_deg: 0.0,
            max_step_m: 0.05,
            dropout: 0.0,
            detection_noise_px: 0.0,
            ..Default::default()
        },
    )
}

fn annotated_lines(seq: &scene::Sequence) -> BTreeMap<u64, Vec<LineSegment2D>> {
    seq.annotation.frames().iter().map(|f| (f.frame_id, f.lines.clone())).collect()
}

#[test]
fn perfect_detections_score_full_marks() {
    let seq = exact_sequence(1);
    let detections = Detections {
        frames: seq
            .annotation
            .frames()
            .iter()
            .map(|f| (f.frame_id, f.lines.iter().map(|l| l.with_score(0.9).unwrap()).collect()))
            .collect(),
        scored: Some(true),
    };
    let size = (seq.camera.width, seq.camera.height);
    let r = evaluate_detection(&seq.annotation, &detections, &DetectionSettings { image_size: size, ..Default::default() })
        .unwrap();
    for key in ["sAP5", "sAP10", "sP5", "sR5", "sF5"] {
        assert_eq!(r.metrics[key], Some(100.0), "{key}");
    }
    let r = evaluate_heatmap(&seq.annotation, &detections, &HeatmapSettings { image_size: size, ..Default::default() })
        .unwrap();
    assert_eq!(r.metrics["FH"], Some(100.0));
    assert_eq!(r.metrics["fp"], Some(0.0));
}

#[test]
fn ground_truth_matches_are_perfect_associations() {
    let seq = exact_sequence(2);
    let r = evaluate_association(&seq.annotation, &seq.gt_matches, &AssociationSettings::default()).unwrap();
    assert_eq!(r.metrics["P"], Some(1.0));
    assert_eq!(r.metrics["R"], Some(1.0));
    assert_eq!(r.metrics["fp"], Some(0.0));

    let r = evaluate_association(&seq.annotation, &seq.matches, &AssociationSettings::default()).unwrap();
    assert!(r.metrics["R"].unwrap() < 1.0);
}

#[test]
fn exact_sequence_recovers_relative_poses() {
    let seq = exact_sequence(3);
    let r = evaluate_pose(
        &annotated_lines(&seq),
        &seq.gt_matches,
        &seq.depth,
        &seq.trajectory,
        &seq.camera,
        &PoseSettings::default(),
    )
    .unwrap();
    assert_eq!(r.metrics["failures"], Some(0.0));
    assert!(r.metrics["median_trans"].unwrap() < 1e-6, "{:?}", r.metrics);
    assert!(r.metrics["median_rot"].unwrap() < 1e-6, "{:?}", r.metrics);
}

#[test]
fn stride_changes_the_pairs() {
    let seq = exact_sequence(4);
    let settings = PoseSettings {
        stride: 2,
        ..Default::default()
    };
    let matches = BTreeMap::new();
    let r = evaluate_pose(&annotated_lines(&seq), &matches, &seq.depth, &seq.trajectory, &seq.camera, &settings).unwrap();
    assert_eq!(r.metrics["pairs"], Some(4.0));
    // No matches at all: every pair fails and the medians are absent.
    assert_eq!(r.metrics["failure_fraction"], Some(1.0));
    assert_eq!(r.metrics["median_trans"], None);
}

#[test]
fn repeatability_of_noiseless_detections_is_high() {
    let seq = exact_sequence(5);
    let detections = Detections {
        frames: annotated_lines(&seq),
        scored: Some(false),
    };
    let r = evaluate_repeatability(&detections, &seq.depth, &seq.trajectory, &seq.camera, &RepeatabilitySettings::default())
        .unwrap();
    assert_eq!(r.metrics["pairs"], Some(5.0));
    assert!(r.metrics["Rep5"].unwrap() > 0.95, "{:?}", r.metrics["Rep5"]);
    assert!(r.metrics["LE5"].unwrap() < 0.5);
}

#[test]
fn detections_on_unannotated_frames_are_rejected() {
    let seq = exact_sequence(6);
    let mut detections = seq.detections.clone();
    detections.frames.insert(99, vec![]);
    let err = evaluate_detection(&seq.annotation, &detections, &DetectionSettings::default()).unwrap_err();
    assert!(err.is_input_error());
    assert!(err.to_string().contains("99"), "{err}");
}
