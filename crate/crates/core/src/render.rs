//! Debug images: annotated frames, the observed pixels of the located target,
//! and the template set.

use image::{GrayImage, Rgb, RgbImage};

use crate::appearance::{unstack, AppearanceVector};
use crate::error::Result;
use crate::eval::BBox;
use crate::mask::ObservationMask;
use crate::templates::TemplateSet;

pub const PRED_COLOR: Rgb<u8> = Rgb([255, 48, 48]);
pub const GT_COLOR: Rgb<u8> = Rgb([48, 220, 48]);
/// Unobserved pixels in the mask view.
pub const MISSING_COLOR: Rgb<u8> = Rgb([40, 40, 160]);

/// Scale factor applied to patches so 20x20 views are readable.
pub const PATCH_ZOOM: u32 = 8;

fn gray_to_rgb(frame: &GrayImage) -> RgbImage {
    RgbImage::from_fn(frame.width(), frame.height(), |x, y| {
        let v = frame.get_pixel(x, y).0[0];
        Rgb([v, v, v])
    })
}

/// Draws the outline of `b` (pixels `floor(x) .. floor(x + w) - 1`), clipped
/// to the image.
pub fn draw_box(img: &mut RgbImage, b: &BBox, color: Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = b.x.floor() as i64;
    let y0 = b.y.floor() as i64;
    let x1 = (b.x + b.w).floor() as i64 - 1;
    let y1 = (b.y + b.h).floor() as i64 - 1;
    let mut put = |x: i64, y: i64| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.put_pixel(x as u32, y as u32, color);
        }
    };
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
}

/// Frame with the prediction and, if given, the ground truth drawn on top.
pub fn overlay(frame: &GrayImage, pred: &BBox, gt: Option<&BBox>) -> RgbImage {
    let mut img = gray_to_rgb(frame);
    if let Some(g) = gt {
        draw_box(&mut img, g, GT_COLOR);
    }
    draw_box(&mut img, pred, PRED_COLOR);
    img
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// The target patch with observed pixels in gray and the rest flat colored,
/// magnified by [`PATCH_ZOOM`].
pub fn mask_view(target: &AppearanceVector, mask: &ObservationMask, width: usize, height: usize) -> Result<RgbImage> {
    let patch = unstack(target, width, height)?;
    let observed = mask.to_flags();
    let zoom = PATCH_ZOOM;
    Ok(RgbImage::from_fn(width as u32 * zoom, height as u32 * zoom, |x, y| {
        let (r, c) = ((y / zoom) as usize, (x / zoom) as usize);
        // Vectors stack columns.
        if observed[c * height + r] {
            let v = to_u8(patch.get(r, c));
            Rgb([v, v, v])
        } else {
            MISSING_COLOR
        }
    }))
}

/// All templates side by side, magnified, with a one-pixel gap.
pub fn template_montage(ts: &TemplateSet, width: usize, height: usize) -> Result<GrayImage> {
    let zoom = PATCH_ZOOM;
    let (tw, th) = (width as u32 * zoom, height as u32 * zoom);
    let n = ts.len() as u32;
    let mut img = GrayImage::from_pixel(n * (tw + 1) - 1, th, image::Luma([0]));
    for j in 0..ts.len() {
        let patch = unstack(&ts.column(j), width, height)?;
        let x_off = j as u32 * (tw + 1);
        for y in 0..th {
            for x in 0..tw {
                let v = patch.get((y / zoom) as usize, (x / zoom) as usize);
                img.put_pixel(x_off + x, y, image::Luma([to_u8(v)]));
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_outline_is_drawn_and_clipped() {
        let frame = GrayImage::from_pixel(10, 10, image::Luma([0]));
        let img = overlay(&frame, &BBox::new(2.0, 3.0, 4.0, 5.0), Some(&BBox::new(8.0, 8.0, 5.0, 5.0)));
        assert_eq!(*img.get_pixel(2, 3), PRED_COLOR);
        assert_eq!(*img.get_pixel(5, 7), PRED_COLOR);
        assert_eq!(*img.get_pixel(3, 4), Rgb([0, 0, 0]));
        assert_eq!(*img.get_pixel(6, 3), Rgb([0, 0, 0]));
        assert_eq!(*img.get_pixel(9, 8), GT_COLOR);
    }

    #[test]
    fn mask_view_marks_missing_pixels() {
        // 2x2 patch, column-major: (0,0)=0, (1,0)=1, (0,1)=0.5, (1,1)=0.25
        let target = AppearanceVector::new(vec![0.0, 1.0, 0.5, 0.25]);
        let mask = ObservationMask::new(vec![1, 2], 4).unwrap();
        let img = mask_view(&target, &mask, 2, 2).unwrap();
        let z = PATCH_ZOOM;
        assert_eq!(img.dimensions(), (2 * z, 2 * z));
        assert_eq!(*img.get_pixel(0, 0), MISSING_COLOR);
        assert_eq!(*img.get_pixel(0, z), Rgb([255, 255, 255]));
        assert_eq!(*img.get_pixel(z, 0), Rgb([128, 128, 128]));
        assert_eq!(*img.get_pixel(z, z), MISSING_COLOR);
    }

    #[test]
    fn montage_places_templates_left_to_right() {
        let cols = [AppearanceVector::new(vec![0.0; 4]), AppearanceVector::new(vec![1.0; 4])];
        let ts = TemplateSet::from_columns(&cols).unwrap();
        let img = template_montage(&ts, 2, 2).unwrap();
        let z = PATCH_ZOOM;
        assert_eq!(img.dimensions(), (4 * z + 1, 2 * z));
        assert_eq!(img.get_pixel(0, 0).0[0], 0);
        assert_eq!(img.get_pixel(2 * z + 1, 0).0[0], 255);
    }
}
