use std::fs;
use std::path::Path;

use image::{GrayImage, Luma};
use mctrack::cli::main_with;
use mctrack::io::{load_groundtruth, load_sequence, read_boxes_csv, CSV_HEADER};
use mctrack::run::metrics_from_rows;
use mctrack::{Error, FrameSource};

fn gradient(w: u32, h: u32, offset: u8) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| Luma([(x * 3 + y * 5) as u8 ^ offset]))
}

fn run(args: &[&str]) -> i32 {
    main_with(std::iter::once("mctrack").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identical_pgm_frames_load_identically() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.pgm", "b.pgm", "c.pgm"] {
        gradient(16, 12, 0).save(dir.path().join(name)).unwrap();
    }
    let seq = load_sequence(dir.path()).unwrap();
    assert_eq!(seq.frame_count(), 3);
    assert_eq!(seq.frame_size(), (16, 12));
    let frames = seq.load_all().unwrap();
    assert!(frames.iter().all(|f| *f == frames[0]));
}

#[test]
fn mixed_sizes_name_the_offending_file() {
    let dir = tempfile::tempdir().unwrap();
    gradient(16, 12, 0).save(dir.path().join("0001.png")).unwrap();
    gradient(16, 12, 0).save(dir.path().join("0002.png")).unwrap();
    gradient(8, 12, 0).save(dir.path().join("0003.png")).unwrap();
    let err = load_sequence(dir.path()).unwrap_err();
    assert!(err.to_string().contains("0003.png"), "{err}");
}

#[test]
fn corrupt_file_is_an_ingestion_error_with_its_name() {
    let dir = tempfile::tempdir().unwrap();
    gradient(16, 12, 0).save(dir.path().join("0001.png")).unwrap();
    fs::write(dir.path().join("0002.png"), b"not an image").unwrap();
    let err = load_sequence(dir.path()).and_then(|s| s.load_all()).unwrap_err();
    assert!(err.to_string().contains("0002.png"), "{err}");
}

#[test]
fn otb_jpeg_frames_come_back_in_numeric_order() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img");
    fs::create_dir(&img).unwrap();
    // Unpadded names sort lexicographically as 1, 10, 11, 2, ...
    for k in 1..=12u8 {
        GrayImage::from_pixel(8, 8, Luma([k * 20])).save(img.join(format!("{k}.jpg"))).unwrap();
    }
    let seq = load_sequence(dir.path()).unwrap();
    let names: Vec<String> = seq
        .paths()
        .iter()
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    let mut sorted = names.clone();
    sorted.sort_by_key(|n| n.parse::<u32>().unwrap());
    assert_eq!(names, sorted);
    let means: Vec<f64> = (0..seq.len())
        .map(|i| {
            let f = seq.frame(i).unwrap();
            f.pixels().map(|p| f64::from(p.0[0])).sum::<f64>() / 64.0
        })
        .collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
}

#[test]
fn groundtruth_count_must_match_frames() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img");
    fs::create_dir(&img).unwrap();
    for k in 1..=3 {
        gradient(32, 32, 0).save(img.join(format!("{k:04}.png"))).unwrap();
    }
    fs::write(dir.path().join("groundtruth_rect.txt"), "4,4,10,10\n5,4,10,10\n").unwrap();
    let code = run(&["track", "--seq", s(dir.path()), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code, 1);
    let gt = load_groundtruth(&dir.path().join("groundtruth_rect.txt")).unwrap();
    assert!(matches!(gt.check_frames(3), Err(Error::CountMismatch { .. })));
}

#[test]
fn synth_track_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"frames": 6, "occluders": [], "seed": 3}"#).unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"num_candidates": 40, "patch_w": 10, "patch_h": 10, "n_templates": 4}"#).unwrap();
    let seq = dir.path().join("seq");
    let out = dir.path().join("out");

    assert_eq!(run(&["synth", "--config", s(&spec), "--out", s(&seq)]), 0);
    assert!(seq.join("img").join("0006.png").is_file());
    assert_eq!(
        run(&["track", "--seq", s(&seq), "--config", s(&cfg), "--out", s(&out), "--overlay", "--seed", "9"]),
        0
    );

    let csv = fs::read_to_string(out.join("boxes.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv.lines().count(), 7);
    for k in 0..6 {
        assert!(out.join("overlay").join(format!("{k:06}.png")).is_file());
        assert!(out.join("mask").join(format!("{k:06}.png")).is_file());
    }

    // Metrics recomputed from the CSV equal the emitted report.
    let gt = load_groundtruth(&seq.join("groundtruth_rect.txt")).unwrap();
    let rows = read_boxes_csv(&out.join("boxes.csv")).unwrap();
    let recomputed = serde_json::to_string_pretty(&metrics_from_rows(&rows, &gt).unwrap()).unwrap();
    let written = fs::read_to_string(out.join("metrics.json")).unwrap();
    assert_eq!(written.trim_end(), recomputed);

    // eval rewrites the same file byte for byte.
    assert_eq!(run(&["eval", "--seq", s(&seq), "--out", s(&out)]), 0);
    assert_eq!(fs::read_to_string(out.join("metrics.json")).unwrap(), written);
}

#[test]
fn seeded_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"num_candidates": 30, "patch_w": 8, "patch_h": 8, "n_templates": 3}"#).unwrap();
    let seq = dir.path().join("seq");
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"frames": 5, "occluders": []}"#).unwrap();
    assert_eq!(run(&["synth", "--config", s(&spec), "--out", s(&seq)]), 0);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert_eq!(run(&["track", "--seq", s(&seq), "--config", s(&cfg), "--out", s(&out)]), 0);
        outputs.push((
            fs::read(out.join("boxes.csv")).unwrap(),
            fs::read(out.join("metrics.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let other = dir.path().join("c");
    assert_eq!(run(&["track", "--seq", s(&seq), "--config", s(&cfg), "--out", s(&other), "--seed", "1"]), 0);
    assert_ne!(fs::read(other.join("boxes.csv")).unwrap(), outputs[0].0);
}

#[test]
fn sweep_writes_one_row_per_rate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"frames": 4, "occluders": []}"#).unwrap();
    let seq = dir.path().join("seq");
    assert_eq!(run(&["synth", "--config", s(&spec), "--out", s(&seq)]), 0);
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"num_candidates": 20, "patch_w": 8, "patch_h": 8, "n_templates": 3}"#).unwrap();
    let out = dir.path().join("out");
    let code = run(&[
        "sweep", "--seq", s(&seq), "--config", s(&cfg), "--out", s(&out), "--sweep-obs-rate", "0.3,0.5,0.7,0.9",
    ]);
    assert_eq!(code, 0);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("obs_rate,mean_tle,mean_overlap"));
    let rates: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rates, ["0.3", "0.5", "0.7", "0.9"]);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["track", "--sweep-obs-rate", "0.5"]), 2);
    assert_eq!(run(&["sweep", "--overlay", "--sweep-obs-rate", "0.5"]), 2);
    assert_eq!(run(&["sweep", "--sweep-obs-rate", "0.5,abc"]), 2);
    assert_eq!(run(&["synth", "--gt", "x.txt"]), 2);
    assert_eq!(run(&["bogus"]), 2);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"num_candidates": 10, "nonsense": 1}"#).unwrap();
    assert!(mctrack::io::load_config(&cfg).is_err());
}
