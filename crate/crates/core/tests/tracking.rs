use mctrack::appearance::MotionState;
use mctrack::synth::{generate_synthetic, MotionPath};
use mctrack::tracker::{run_tracker_with, Tracker};
use mctrack::{run_tracker, BBox, SyntheticSpec, TrackerConfig};

fn small_cfg() -> TrackerConfig {
    TrackerConfig {
        num_candidates: 60,
        patch_w: 10,
        patch_h: 10,
        n_templates: 5,
        ..TrackerConfig::default()
    }
}

fn short_spec() -> SyntheticSpec {
    SyntheticSpec {
        frames: 8,
        occluders: vec![],
        ..SyntheticSpec::default()
    }
}

#[test]
fn first_frame_reports_the_initial_box() {
    let seq = generate_synthetic(&short_spec()).unwrap();
    let init = seq.groundtruth.boxes[0];
    let results = run_tracker(&seq.frames, &init, &small_cfg()).unwrap();
    assert_eq!(results.len(), 8);
    assert_eq!(results[0].bbox, init);
    assert!(results.iter().enumerate().all(|(k, r)| r.frame == k));
}

#[test]
fn winner_has_the_smallest_error_of_its_frame() {
    let seq = generate_synthetic(&short_spec()).unwrap();
    let results = run_tracker(&seq.frames, &seq.groundtruth.boxes[0], &small_cfg()).unwrap();
    for r in &results[1..] {
        let errs: Vec<f64> = r.per_candidate.iter().filter_map(|c| c.err).collect();
        assert_eq!(errs.len(), 60);
        assert!(errs.iter().all(|&e| r.err <= e));
        assert!((r.score - (-r.err).exp()).abs() < 1e-15);
        assert!(r.mask.indices().iter().all(|&j| r.err_map[j] == 0.0));
        assert_eq!(r.mask.len(), small_cfg().observed_count());
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let seq = generate_synthetic(&short_spec()).unwrap();
    let init = seq.groundtruth.boxes[0];
    let serial = run_tracker(&seq.frames, &init, &TrackerConfig { workers: 1, ..small_cfg() }).unwrap();
    let pooled = run_tracker(&seq.frames, &init, &TrackerConfig { workers: 3, ..small_cfg() }).unwrap();
    assert_eq!(serial, pooled);
}

#[test]
fn static_target_is_held() {
    let spec = SyntheticSpec {
        frames: 10,
        path: MotionPath::stationary(60.0, 40.0),
        illumination: 0.0,
        occluders: vec![],
        ..SyntheticSpec::default()
    };
    let seq = generate_synthetic(&spec).unwrap();
    let cfg = TrackerConfig {
        num_candidates: 150,
        ..TrackerConfig::default()
    };
    let results = run_tracker(&seq.frames, &seq.groundtruth.boxes[0], &cfg).unwrap();
    for r in &results {
        let (cx, cy) = r.bbox.center();
        assert!((cx - 80.0).abs() < 3.0 && (cy - 60.0).abs() < 3.0, "frame {}: {:?}", r.frame, r.bbox);
    }
}

#[test]
fn callback_sees_every_frame_in_order() {
    let seq = generate_synthetic(&short_spec()).unwrap();
    let mut seen = Vec::new();
    run_tracker_with(&seq.frames, &seq.groundtruth.boxes[0], &small_cfg(), |r| seen.push(r.frame)).unwrap();
    assert_eq!(seen, (0..8).collect::<Vec<_>>());
}

#[test]
fn frames_of_a_different_size_are_rejected() {
    let seq = generate_synthetic(&short_spec()).unwrap();
    let (mut tracker, _) = Tracker::new(&seq.frames[0], &seq.groundtruth.boxes[0], small_cfg()).unwrap();
    let other = image::GrayImage::new(50, 50);
    assert!(tracker.step(&other).is_err());
    assert!(tracker.step(&seq.frames[1]).is_ok());
}

#[test]
fn box_follows_scale() {
    let s = MotionState { x: 50.0, y: 40.0, s: 1.5 };
    let b = s.bbox(20.0, 10.0);
    assert_eq!(b.center(), (50.0, 40.0));
    assert_eq!((b.w, b.h), (30.0, 15.0));
    assert_eq!(MotionState::from_bbox(&BBox::new(40.0, 35.0, 20.0, 10.0)).x, 50.0);
}
