//! Whole-sequence jobs that write their results to disk: tracking, offline
//! evaluation of a results CSV, and the observation-rate sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{evaluate, BBox, EvalReport};
use crate::io::{boxes_csv, parse_boxes_csv, BoxRow, GroundTruth};
use crate::render;
use crate::synth::{generate_synthetic, SyntheticSpec};
use crate::tracker::{FrameResult, FrameSource, Tracker, TrackerConfig};

pub const BOXES_FILE: &str = "boxes.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const SWEEP_FILE: &str = "sweep.csv";

/// A sequence with its ground truth, ready to track.
pub struct LabeledSequence<S> {
    pub name: String,
    pub frames: S,
    pub groundtruth: GroundTruth,
}

impl LabeledSequence<Vec<image::GrayImage>> {
    pub fn synthetic(spec: &SyntheticSpec) -> Result<Self> {
        let seq = generate_synthetic(spec)?;
        Ok(LabeledSequence {
            name: format!("synthetic-{}", spec.seed),
            frames: seq.frames,
            groundtruth: seq.groundtruth,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrackOptions {
    /// Also write `overlay/`, `mask/` and `templates.png`.
    pub overlay: bool,
}

#[derive(Debug, Clone)]
pub struct TrackSummary {
    pub rows: Vec<BoxRow>,
    /// Present when ground truth was available.
    pub report: Option<EvalReport>,
    pub boxes_path: PathBuf,
    pub metrics_path: Option<PathBuf>,
}

fn frame_name(k: usize) -> String {
    format!("{k:06}.png")
}

/// Tracks `frames` from `init` and writes `boxes.csv` into `out_dir`, plus
/// `metrics.json` when `gt` is given. Frame 0 is the initialization frame.
pub fn track_to_dir<S: FrameSource + ?Sized>(
    frames: &S,
    init: &BBox,
    gt: Option<&GroundTruth>,
    cfg: &TrackerConfig,
    out_dir: &Path,
    opts: &TrackOptions,
) -> Result<TrackSummary> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    if let Some(gt) = gt {
        gt.check_frames(frames.len())?;
    }
    fs::create_dir_all(out_dir)?;
    let (overlay_dir, mask_dir) = (out_dir.join("overlay"), out_dir.join("mask"));
    if opts.overlay {
        fs::create_dir_all(&overlay_dir)?;
        fs::create_dir_all(&mask_dir)?;
    }

    let mut rows = Vec::with_capacity(frames.len());
    let mut emit = |frame: &image::GrayImage, r: &FrameResult| -> Result<()> {
        rows.push(BoxRow::from(r));
        if opts.overlay {
            let g = gt.map(|g| &g.boxes[r.frame]);
            render::overlay(frame, &r.bbox, g).save(overlay_dir.join(frame_name(r.frame)))?;
            render::mask_view(&r.target, &r.mask, cfg.patch_w, cfg.patch_h)?
                .save(mask_dir.join(frame_name(r.frame)))?;
        }
        Ok(())
    };

    let first = frames.frame(0)?;
    let (mut tracker, r0) = Tracker::new(&first, init, cfg.clone())?;
    emit(&first, &r0)?;
    for k in 1..frames.len() {
        let frame = frames.frame(k)?;
        let r = tracker.step(&frame)?;
        emit(&frame, &r)?;
    }
    if opts.overlay {
        render::template_montage(tracker.templates(), cfg.patch_w, cfg.patch_h)?
            .save(out_dir.join("templates.png"))?;
    }

    let csv = boxes_csv(&rows);
    let boxes_path = out_dir.join(BOXES_FILE);
    fs::write(&boxes_path, &csv)?;

    let (report, metrics_path) = match gt {
        Some(gt) => {
            // Metrics come from the CSV text, the single source of truth.
            let report = metrics_from_rows(&parse_boxes_csv(&csv, &boxes_path)?, gt)?;
            let path = out_dir.join(METRICS_FILE);
            write_metrics(&path, &report)?;
            (Some(report), Some(path))
        }
        None => (None, None),
    };
    Ok(TrackSummary {
        rows,
        report,
        boxes_path,
        metrics_path,
    })
}

pub fn metrics_from_rows(rows: &[BoxRow], gt: &GroundTruth) -> Result<EvalReport> {
    gt.check_frames(rows.len())?;
    for (i, r) in rows.iter().enumerate() {
        if r.frame != i {
            return Err(Error::InvalidInput(format!("row {i} is for frame {}", r.frame)));
        }
    }
    let pred: Vec<BBox> = rows.iter().map(|r| r.bbox).collect();
    evaluate(&pred, &gt.boxes)
}

pub fn write_metrics(path: &Path, report: &EvalReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads `boxes.csv` from `out_dir`, scores it and writes `metrics.json`.
pub fn eval_dir(out_dir: &Path, gt: &GroundTruth) -> Result<EvalReport> {
    let path = out_dir.join(BOXES_FILE);
    let rows = parse_boxes_csv(&fs::read_to_string(&path)?, &path)?;
    let report = metrics_from_rows(&rows, gt)?;
    write_metrics(&out_dir.join(METRICS_FILE), &report)?;
    Ok(report)
}

/// One observation rate, averaged over every frame of every sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub obs_rate: f64,
    pub mean_tle: f64,
    pub mean_overlap: f64,
    pub precision_at_20: f64,
    pub success_at_0_5: f64,
}

pub fn parse_rates(list: &str) -> Result<Vec<f64>> {
    let rates: Vec<f64> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|r| *r > 0.0 && *r <= 1.0)
                .ok_or_else(|| Error::Usage(format!("bad observation rate {s:?}; expected a number in (0, 1]")))
        })
        .collect::<Result<_>>()?;
    if rates.is_empty() {
        return Err(Error::Usage("--sweep-obs-rate needs at least one rate".into()));
    }
    Ok(rates)
}

/// Reruns tracking at each observation rate. Frames are pooled across
/// sequences before averaging.
pub fn sweep_obs_rate<S: FrameSource>(
    sequences: &[LabeledSequence<S>],
    cfg: &TrackerConfig,
    rates: &[f64],
    mut on_run: impl FnMut(f64, &str, &EvalReport),
) -> Result<Vec<SweepRow>> {
    if sequences.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one sequence".into()));
    }
    let mut table = Vec::with_capacity(rates.len());
    for &rate in rates {
        let run_cfg = TrackerConfig {
            obs_rate: rate,
            ..cfg.clone()
        };
        run_cfg.validate()?;
        let (mut pred, mut gt) = (Vec::new(), Vec::new());
        for seq in sequences {
            seq.groundtruth.check_frames(seq.frames.len())?;
            let results = crate::tracker::run_tracker(&seq.frames, &seq.groundtruth.boxes[0], &run_cfg)?;
            let boxes: Vec<BBox> = results.iter().map(|r| r.bbox).collect();
            on_run(rate, &seq.name, &evaluate(&boxes, &seq.groundtruth.boxes)?);
            pred.extend(boxes);
            gt.extend_from_slice(&seq.groundtruth.boxes);
        }
        let report = evaluate(&pred, &gt)?;
        table.push(SweepRow {
            obs_rate: rate,
            mean_tle: report.mean_tle,
            mean_overlap: report.mean_overlap,
            precision_at_20: report.precision_at_20,
            success_at_0_5: report.success_at_0_5,
        });
    }
    Ok(table)
}

pub const SWEEP_HEADER: &str = "obs_rate,mean_tle,mean_overlap,precision_at_20,success_at_0_5";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.obs_rate, r.mean_tle, r.mean_overlap, r.precision_at_20, r.success_at_0_5
        );
    }
    out
}
