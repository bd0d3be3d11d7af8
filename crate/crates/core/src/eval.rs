//! Tracking metrics: center error (TLE), overlap ratio (OR), the precision
//! and success curves built from them, and the low-dimension degree of a
//! stack of target appearances.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold at which precision is reported, pixels.
pub const PRECISION_THRESHOLD: f64 = 20.0;
/// Threshold at which the success rate is reported.
pub const SUCCESS_THRESHOLD: f64 = 0.5;

/// Axis-aligned box: left, top, width, height in pixels. Covers the
/// half-open ranges `[x, x + w) x [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite()) && self.w > 0.0 && self.h > 0.0
    }

    pub fn intersects_frame(&self, width: u32, height: u32) -> bool {
        self.x < f64::from(width) && self.x + self.w > 0.0 && self.y < f64::from(height) && self.y + self.h > 0.0
    }
}

/// Distance between box centers.
pub fn tle(pred: &BBox, gt: &BBox) -> f64 {
    let (px, py) = pred.center();
    let (gx, gy) = gt.center();
    (px - gx).hypot(py - gy)
}

/// Intersection over union.
pub fn overlap(pred: &BBox, gt: &BBox) -> f64 {
    let iw = (pred.x + pred.w).min(gt.x + gt.w) - pred.x.max(gt.x);
    let ih = (pred.y + pred.h).min(gt.y + gt.h) - pred.y.max(gt.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = pred.area() + gt.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

/// `0, 1, ..., 50` pixels.
pub fn default_precision_thresholds() -> Vec<f64> {
    (0..=50).map(f64::from).collect()
}

/// `0, 0.02, ..., 1.0`.
pub fn default_success_thresholds() -> Vec<f64> {
    (0..=50).map(|i| f64::from(i) / 50.0).collect()
}

/// Fraction of frames whose TLE is strictly below each threshold.
pub fn precision_curve(tles: &[f64], thresholds: &[f64]) -> Result<Curve> {
    fraction_curve(tles, thresholds, |v, t| v < t)
}

/// Fraction of frames whose overlap is strictly above each threshold.
pub fn success_curve(ors: &[f64], thresholds: &[f64]) -> Result<Curve> {
    fraction_curve(ors, thresholds, |v, t| v > t)
}

fn fraction_curve(series: &[f64], thresholds: &[f64], hit: impl Fn(f64, f64) -> bool) -> Result<Curve> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = series.len() as f64;
    let values = thresholds
        .iter()
        .map(|&t| series.iter().filter(|&&v| hit(v, t)).count() as f64 / n)
        .collect();
    Ok(Curve {
        thresholds: thresholds.to_vec(),
        values,
    })
}

pub fn precision_at(tles: &[f64], delta: f64) -> Result<f64> {
    Ok(precision_curve(tles, &[delta])?.values[0])
}

pub fn success_at(ors: &[f64], rho: f64) -> Result<f64> {
    Ok(success_curve(ors, &[rho])?.values[0])
}

/// Smallest `k` whose leading singular values carry at least `theta` of the
/// singular-value mass, and `k / min(rows, cols)`.
pub fn low_dimension_degree(targets: &DMatrix<f64>, theta: f64) -> Result<(usize, f64)> {
    if targets.ncols() == 0 || targets.nrows() == 0 {
        return Err(Error::InvalidInput("empty target matrix".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidInput(format!("theta must lie in (0, 1], got {theta}")));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let mut sv: Vec<f64> = targets.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = sv.iter().sum();
    if total == 0.0 {
        return Ok((0, 0.0));
    }
    let goal = theta * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut k = sv.len();
    for (i, s) in sv.iter().enumerate() {
        acc += s;
        if acc >= goal {
            k = i + 1;
            break;
        }
    }
    let denom = targets.nrows().min(targets.ncols());
    Ok((k, k as f64 / denom as f64))
}

/// Per-frame and summary metrics for one tracked sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frames: usize,
    pub tle: Vec<f64>,
    pub mean_tle: f64,
    pub median_tle: f64,
    pub overlap: Vec<f64>,
    pub mean_overlap: f64,
    pub precision_at_20: f64,
    pub success_at_0_5: f64,
    pub precision_curve: Curve,
    pub success_curve: Curve,
}

impl EvalReport {
    pub fn precision_at(&self, delta: f64) -> f64 {
        precision_at(&self.tle, delta).unwrap_or(0.0)
    }

    pub fn success_at(&self, rho: f64) -> f64 {
        success_at(&self.overlap, rho).unwrap_or(0.0)
    }
}

pub fn evaluate(pred: &[BBox], gt: &[BBox]) -> Result<EvalReport> {
    if pred.len() != gt.len() {
        return Err(Error::CountMismatch {
            boxes: pred.len(),
            frames: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptySeries);
    }
    let tles: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| tle(p, g)).collect();
    let ors: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| overlap(p, g)).collect();
    let n = tles.len() as f64;
    Ok(EvalReport {
        frames: tles.len(),
        mean_tle: tles.iter().sum::<f64>() / n,
        median_tle: median(&tles),
        mean_overlap: ors.iter().sum::<f64>() / n,
        precision_at_20: precision_at(&tles, PRECISION_THRESHOLD)?,
        success_at_0_5: success_at(&ors, SUCCESS_THRESHOLD)?,
        precision_curve: precision_curve(&tles, &default_precision_thresholds())?,
        success_curve: success_curve(&ors, &default_success_thresholds())?,
        tle: tles,
        overlap: ors,
    })
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
