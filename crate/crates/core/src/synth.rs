//! Synthetic sequences with exact ground truth: a low-rank textured target
//! moving over a static background, with an illumination ramp, a scheduled
//! occluder and pixel noise.

use std::f64::consts::TAU;

use image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::BBox;
use crate::io::GroundTruth;

/// Target path: `start + velocity * k + amplitude * sin(2 pi k / period)`,
/// rounded to whole pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPath {
    pub start: (f64, f64),
    pub velocity: (f64, f64),
    pub amplitude: (f64, f64),
    pub period: f64,
}

impl MotionPath {
    pub fn stationary(x: f64, y: f64) -> Self {
        MotionPath {
            start: (x, y),
            velocity: (0.0, 0.0),
            amplitude: (0.0, 0.0),
            period: 1.0,
        }
    }

    fn position(&self, k: usize) -> (f64, f64) {
        let k = k as f64;
        let phase = (TAU * k / self.period).sin();
        (
            (self.start.0 + self.velocity.0 * k + self.amplitude.0 * phase).round(),
            (self.start.1 + self.velocity.1 * k + self.amplitude.1 * phase).round(),
        )
    }
}

/// Frames `[start, end)` during which the top `coverage` fraction of the
/// target box is painted over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccluderSpan {
    pub start: usize,
    pub end: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub target_w: u32,
    pub target_h: u32,
    /// Number of separable components in the target texture.
    pub texture_rank: usize,
    pub path: MotionPath,
    /// Frame `k` is scaled by `1 + illumination * k / frames`.
    pub illumination: f64,
    pub occluders: Vec<OccluderSpan>,
    /// Standard deviation of additive Gaussian noise, in `[0, 1]` units.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// 100 frames, 20% brightening, noise 0.02 and a 30% occluder over
    /// frames 40..50.
    fn default() -> Self {
        SyntheticSpec {
            width: 160,
            height: 120,
            frames: 100,
            target_w: 40,
            target_h: 40,
            texture_rank: 3,
            path: MotionPath {
                start: (50.0, 38.0),
                velocity: (0.4, 0.1),
                amplitude: (8.0, 12.0),
                period: 60.0,
            },
            illumination: 0.2,
            occluders: vec![OccluderSpan {
                start: 40,
                end: 50,
                coverage: 0.3,
            }],
            noise_std: 0.02,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::Config("synthetic sequence needs frames and a size".into()));
        }
        if self.target_w == 0 || self.target_h == 0 || self.target_w > self.width || self.target_h > self.height {
            return Err(Error::Config("target must fit inside the frame".into()));
        }
        if self.texture_rank == 0 {
            return Err(Error::Config("texture_rank must be at least 1".into()));
        }
        for o in &self.occluders {
            if !(0.0..1.0).contains(&o.coverage) {
                return Err(Error::Config(format!("occluder coverage {} not in [0, 1)", o.coverage)));
            }
            if o.start > o.end || o.end > self.frames {
                return Err(Error::Config(format!("occluder frames {}..{} out of range", o.start, o.end)));
            }
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config("noise_std must be non-negative".into()));
        }
        Ok(())
    }

    /// Ground-truth box of frame `k`, kept inside the frame.
    pub fn box_at(&self, k: usize) -> BBox {
        let (x, y) = self.path.position(k);
        let x = x.clamp(0.0, f64::from(self.width - self.target_w));
        let y = y.clamp(0.0, f64::from(self.height - self.target_h));
        BBox::new(x, y, f64::from(self.target_w), f64::from(self.target_h))
    }

    /// Rows of the target box covered by the occluder in frame `k`.
    pub fn occluded_rows(&self, k: usize) -> u32 {
        self.occluders
            .iter()
            .filter(|o| (o.start..o.end).contains(&k))
            .map(|o| (o.coverage * f64::from(self.target_h)).round() as u32)
            .max()
            .unwrap_or(0)
    }

    pub fn illumination_factor(&self, k: usize) -> f64 {
        1.0 + self.illumination * k as f64 / self.frames as f64
    }
}

/// A smooth random 1-D profile: a few low-frequency sinusoids.
fn profile(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.5..3.5),
                rng.random_range(0.0..TAU),
                rng.random_range(0.3..1.0),
            )
        })
        .collect();
    (0..len)
        .map(|i| {
            let t = i as f64 / len as f64;
            terms.iter().map(|&(f, p, a)| a * (TAU * f * t + p).sin()).sum()
        })
        .collect()
}

fn rescale(values: &mut [f64], lo: f64, hi: f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-12);
    for v in values {
        *v = lo + (hi - lo) * (*v - min) / span;
    }
}

/// Row-major texture `sum_r u_r v_r^T`, rescaled to `[lo, hi]`.
fn low_rank_texture(w: usize, h: usize, rank: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let factors: Vec<(Vec<f64>, Vec<f64>)> = (0..rank).map(|_| (profile(h, rng), profile(w, rng))).collect();
    let mut tex: Vec<f64> = (0..h)
        .flat_map(|r| {
            let factors = &factors;
            (0..w).map(move |c| factors.iter().map(|(u, v)| u[r] * v[c]).sum::<f64>())
        })
        .collect();
    rescale(&mut tex, lo, hi);
    tex
}

/// Background: many random blobs and gratings, so it is far from low rank.
fn background(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gratings: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let angle = rng.random_range(0.0..TAU);
            let freq = rng.random_range(0.02..0.12);
            (angle.cos() * freq, angle.sin() * freq, rng.random_range(0.0..TAU), rng.random_range(0.2..1.0))
        })
        .collect();
    let blobs: Vec<(f64, f64, f64, f64)> = (0..25)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(3.0..12.0),
                rng.random_range(-1.5..1.5),
            )
        })
        .collect();
    let mut bg: Vec<f64> = (0..h)
        .flat_map(|y| {
            let (gratings, blobs) = (&gratings, &blobs);
            (0..w).map(move |x| {
                let (xf, yf) = (x as f64, y as f64);
                let g: f64 = gratings
                    .iter()
                    .map(|&(fx, fy, p, a)| a * (TAU * (fx * xf + fy * yf) + p).sin())
                    .sum();
                let b: f64 = blobs
                    .iter()
                    .map(|&(bx, by, r, a)| a * (-((xf - bx).powi(2) + (yf - by).powi(2)) / (2.0 * r * r)).exp())
                    .sum();
                g + b
            })
        })
        .collect();
    rescale(&mut bg, 0.1, 0.9);
    bg
}

/// Occluder texture: horizontal stripes.
fn occluder_value(row: u32) -> f64 {
    if (row / 3) % 2 == 0 {
        0.95
    } else {
        0.25
    }
}

/// Frames before noise and quantization, values in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct CleanFrame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<f64>,
}

impl CleanFrame {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.pixels[(y * self.width + x) as usize]
    }
}

/// Renders one frame without noise.
pub fn render_clean(spec: &SyntheticSpec, k: usize, target: &[f64], bg: &[f64]) -> CleanFrame {
    let (w, h) = (spec.width, spec.height);
    let mut pixels = bg.to_vec();
    let b = spec.box_at(k);
    let (bx, by) = (b.x as u32, b.y as u32);
    for r in 0..spec.target_h {
        for c in 0..spec.target_w {
            pixels[((by + r) * w + bx + c) as usize] = target[(r * spec.target_w + c) as usize];
        }
    }
    let factor = spec.illumination_factor(k);
    for p in &mut pixels {
        *p = (*p * factor).clamp(0.0, 1.0);
    }
    for r in 0..spec.occluded_rows(k) {
        for c in 0..spec.target_w {
            pixels[((by + r) * w + bx + c) as usize] = occluder_value(r);
        }
    }
    CleanFrame {
        width: w,
        height: h,
        pixels,
    }
}

/// A generated sequence and everything needed to check it.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<GrayImage>,
    pub groundtruth: GroundTruth,
    /// Target texture, row-major `target_h x target_w`, before illumination.
    pub target: Vec<f64>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticSequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let target = low_rank_texture(
        spec.target_w as usize,
        spec.target_h as usize,
        spec.texture_rank,
        0.15,
        0.8,
        &mut rng,
    );
    let bg = background(spec.width as usize, spec.height as usize, &mut rng);
    let noise = Normal::new(0.0, spec.noise_std.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let mut frames = Vec::with_capacity(spec.frames);
    let mut boxes = Vec::with_capacity(spec.frames);
    for k in 0..spec.frames {
        let clean = render_clean(spec, k, &target, &bg);
        let frame = GrayImage::from_fn(spec.width, spec.height, |x, y| {
            let mut v = clean.get(x, y);
            if spec.noise_std > 0.0 {
                v += noise.sample(&mut rng);
            }
            image::Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8])
        });
        frames.push(frame);
        boxes.push(spec.box_at(k));
    }
    Ok(SyntheticSequence {
        frames,
        groundtruth: GroundTruth { boxes },
        target,
    })
}
