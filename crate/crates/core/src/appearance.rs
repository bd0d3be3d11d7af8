//! Appearance observations: cropping a motion state out of a frame, stacking
//! the patch into a vector, and masking it down to the observed pixels.

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::BBox;
use crate::mask::ObservationMask;

/// Target position (center, pixels) and scale relative to the base box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionState {
    pub x: f64,
    pub y: f64,
    pub s: f64,
}

impl MotionState {
    pub fn new(x: f64, y: f64, s: f64) -> Result<Self> {
        let state = MotionState { x, y, s };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite position {self:?}")));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidState(format!("scale must be positive, got {}", self.s)));
        }
        Ok(())
    }

    /// State centered on `bbox` at unit scale.
    pub fn from_bbox(bbox: &BBox) -> Self {
        let (cx, cy) = bbox.center();
        MotionState { x: cx, y: cy, s: 1.0 }
    }

    /// Box covered by this state for a given base target size.
    pub fn bbox(&self, base_w: f64, base_h: f64) -> BBox {
        let w = self.s * base_w;
        let h = self.s * base_h;
        BBox::new(self.x - w / 2.0, self.y - h / 2.0, w, h)
    }

    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        MotionState {
            x: self.x + dx,
            y: self.y + dy,
            s: self.s,
        }
    }
}

/// Gray patch with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Patch {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Patch {
            width,
            height,
            pixels,
        })
    }

    /// From 8-bit intensities, row-major.
    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(width, height, data.iter().map(|&v| f64::from(v) / 255.0).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |c, r| {
            image::Luma([(self.get(r as usize, c as usize).clamp(0.0, 1.0) * 255.0).round() as u8])
        })
    }
}

/// A patch stacked column-major into a vector with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceVector(Vec<f64>);

impl AppearanceVector {
    /// Values are clamped to `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Self {
        AppearanceVector(values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean distance to another vector of the same length.
    pub fn distance(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<usize> for AppearanceVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// ITU-R 601 luma.
pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let [r, g, b] = img.get_pixel(x, y).0;
        let l = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
        image::Luma([l.round().clamp(0.0, 255.0) as u8])
    })
}

/// Bilinear sample at continuous pixel coordinates, clamping to the border.
/// Integer coordinates hit pixel centers.
pub fn sample_bilinear(frame: &GrayImage, sx: f64, sy: f64) -> f64 {
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let cx = |x: i64| x.clamp(0, w - 1) as u32;
    let cy = |y: i64| y.clamp(0, h - 1) as u32;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let px = |x: i64, y: i64| f64::from(frame.get_pixel(cx(x), cy(y)).0[0]);
    let top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
    let bottom = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
    (top * (1.0 - fy) + bottom * fy) / 255.0
}

/// Resamples the `s*base_w x s*base_h` rectangle centered on the state into
/// an `out_w x out_h` patch.
pub fn crop_patch(
    frame: &GrayImage,
    state: &MotionState,
    base_w: f64,
    base_h: f64,
    out_w: usize,
    out_h: usize,
) -> Result<Patch> {
    state.validate()?;
    let rw = state.s * base_w;
    let rh = state.s * base_h;
    if !(rw > 0.0 && rh > 0.0 && rw.is_finite() && rh.is_finite()) || out_w == 0 || out_h == 0 {
        return Err(Error::InvalidState(format!(
            "zero-area crop {rw}x{rh} -> {out_w}x{out_h}"
        )));
    }
    if frame.width() == 0 || frame.height() == 0 {
        return Err(Error::InvalidInput("empty frame".into()));
    }
    let rect = state.bbox(base_w, base_h);
    if !rect.intersects_frame(frame.width(), frame.height()) {
        return Err(Error::InvalidState(format!(
            "crop {rect:?} lies outside the {}x{} frame",
            frame.width(),
            frame.height()
        )));
    }
    let step_x = rw / out_w as f64;
    let step_y = rh / out_h as f64;
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for r in 0..out_h {
        let sy = rect.y + (r as f64 + 0.5) * step_y - 0.5;
        for c in 0..out_w {
            let sx = rect.x + (c as f64 + 0.5) * step_x - 0.5;
            pixels.push(sample_bilinear(frame, sx, sy));
        }
    }
    Patch::new(out_w, out_h, pixels)
}

/// Stacks the patch column by column.
pub fn to_vector(patch: &Patch) -> AppearanceVector {
    let mut v = Vec::with_capacity(patch.width * patch.height);
    for c in 0..patch.width {
        for r in 0..patch.height {
            v.push(patch.get(r, c));
        }
    }
    AppearanceVector::new(v)
}

/// Inverse of [`to_vector`].
pub fn unstack(v: &AppearanceVector, width: usize, height: usize) -> Result<Patch> {
    if v.len() != width * height {
        return Err(Error::DimensionMismatch {
            expected: width * height,
            actual: v.len(),
        });
    }
    let mut pixels = vec![0.0; width * height];
    for c in 0..width {
        for r in 0..height {
            pixels[r * width + c] = v[c * height + r];
        }
    }
    Patch::new(width, height, pixels)
}

/// Zeroes every entry outside the mask.
pub fn mask_candidate(c: &AppearanceVector, omega: &ObservationMask) -> Result<AppearanceVector> {
    if let Some(&bad) = omega.indices().iter().find(|&&j| j >= c.len()) {
        return Err(Error::InvalidMask(format!(
            "index {bad} out of range for dimension {}",
            c.len()
        )));
    }
    let mut out = vec![0.0; c.len()];
    for &j in omega.indices() {
        out[j] = c[j];
    }
    Ok(AppearanceVector(out))
}

/// Convenience: crop and stack in one step.
pub fn appearance(
    frame: &GrayImage,
    state: &MotionState,
    base: (f64, f64),
    patch: (usize, usize),
) -> Result<AppearanceVector> {
    crop_patch(frame, state, base.0, base.1, patch.0, patch.1).map(|p| to_vector(&p))
}
