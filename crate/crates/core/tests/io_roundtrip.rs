mod common;

use std::collections::BTreeMap;

use common::rng;
use common::scene::{self, SceneOptions};
use lineval::eval::{evaluate_pose, PoseSettings};
use lineval::io::{
    load_annotations, load_detections, load_intrinsics, load_matches, load_trajectory, write_annotations,
    write_depth, write_detections, write_intrinsics, write_matches, DepthDir, DepthSource, Detections, Report,
    ReportFormat,
};
use lineval::metrics::PRPoint;
use lineval::LineSegment2D;
use proptest::prelude::*;

#[test]
fn sequence_survives_disk() {
    let seq = scene::sequence(&mut rng(21), &SceneOptions::default());
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    std::fs::create_dir(p("depth")).unwrap();
    for (id, d) in &seq.depth {
        write_depth(p("depth").join(format!("{id}.png")), d).unwrap();
    }
    write_annotations(p("gt.json"), &seq.annotation).unwrap();
    write_detections(p("det.txt"), &seq.detections).unwrap();
    write_matches(p("matches.txt"), &seq.matches).unwrap();
    seq.trajectory.write(p("traj.txt")).unwrap();
    write_intrinsics(p("cam.json"), &seq.camera).unwrap();

    assert_eq!(load_annotations(p("gt.json")).unwrap(), seq.annotation);
    assert_eq!(load_detections(p("det.txt")).unwrap(), seq.detections);
    assert_eq!(load_matches(p("matches.txt")).unwrap(), seq.matches);
    assert_eq!(load_trajectory(p("traj.txt")).unwrap(), seq.trajectory);
    let camera = load_intrinsics(p("cam.json")).unwrap();
    assert_eq!(camera, seq.camera);
    let depth = DepthDir::open(p("depth"), &camera).unwrap();
    assert_eq!(depth.frame_ids(), seq.depth.keys().copied().collect::<Vec<_>>());
    for (id, d) in &seq.depth {
        assert_eq!(&depth.depth(*id).unwrap(), d);
    }

    let lines: BTreeMap<u64, Vec<LineSegment2D>> =
        seq.annotation.frames().iter().map(|f| (f.frame_id, f.lines.clone())).collect();
    let settings = PoseSettings::default();
    let in_memory = evaluate_pose(&lines, &seq.matches, &seq.depth, &seq.trajectory, &seq.camera, &settings).unwrap();
    let from_disk = evaluate_pose(&lines, &seq.matches, &depth, &seq.trajectory, &camera, &settings).unwrap();
    assert_eq!(in_memory, from_disk);
}

#[test]
fn depth_dir_rejects_foreign_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("notes.png"), b"").unwrap();
    let err = DepthDir::open(dir.path(), &scene::small_camera()).unwrap_err();
    assert!(err.is_input_error());
    assert!(err.to_string().contains("notes.png"), "{err}");
}

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![-1e4..1e4f64, (0..640i32).prop_map(f64::from)]
}

prop_compose! {
    fn detections()(
        rows in prop::collection::vec((0u64..20, coord(), coord(), coord(), coord(), 0.0..=1.0f64), 0..40),
        scored in any::<bool>(),
    ) -> Detections {
        let mut out = Detections::default();
        for (f, x1, y1, x2, y2, s) in rows {
            let Ok(seg) = LineSegment2D::from_coords(x1, y1, x2, y2) else { continue };
            let seg = if scored { seg.with_score(s).unwrap() } else { seg };
            out.frames.entry(f).or_insert_with(Vec::new).push(seg);
            out.scored = Some(scored);
        }
        out
    }
}

prop_compose! {
    fn report()(
        metrics in prop::collection::btree_map("[a-zA-Z0-9_.,\" -]{1,12}", prop::option::of(-1e9..1e9f64), 0..8),
        metadata in prop::collection::btree_map("[a-z_.]{1,8}", "[ -~]{0,20}", 0..5),
        curve in prop::collection::vec((0.0..1.0f64, 0.0..=1.0f64, 0.0..=1.0f64), 0..6),
    ) -> Report {
        let mut r = Report::new("eval-test");
        r.metrics = metrics;
        r.metadata = metadata;
        if !curve.is_empty() {
            let points = curve.into_iter().map(|(threshold, precision, recall)| PRPoint { threshold, precision, recall });
            r.curves.insert("AP".into(), points.collect());
        }
        r
    }
}

proptest! {
    #[test]
    fn detections_round_trip(d in detections()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("det.txt");
        write_detections(&path, &d).unwrap();
        prop_assert_eq!(load_detections(&path).unwrap(), d);
    }

    #[test]
    fn reports_round_trip(r in report()) {
        for format in [ReportFormat::Json, ReportFormat::Csv] {
            let text = r.encode(format).unwrap();
            prop_assert_eq!(&Report::decode(&text, format).unwrap(), &r);
        }
    }
}
