//! Chroma-key cutouts: HSV thresholding of a colored backdrop, binary
//! morphology to clean the mask, scale-normalized transparent cutouts and
//! background substitution.

use image::{GrayImage, Luma, Rgb, RgbImage, Rgba, RgbaImage};
use serde::{Deserialize, Serialize};

use crate::mask::Mask;
use crate::resample;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChromaError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("image is {image:?} but mask is {mask:?}")]
    SizeMismatch { image: (u32, u32), mask: (u32, u32) },
}

/// Hexcone RGB → HSV. Hue in degrees `[0, 360)`, 0 for achromatic pixels;
/// saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let value = max;
    let saturation = if max > 0.0 { delta / max } else { 0.0 };
    let mut hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if hue >= 360.0 {
        hue -= 360.0;
    }
    (hue, saturation, value)
}

pub fn hsv_to_rgb(hue: f64, saturation: f64, value: f64) -> [u8; 3] {
    let c = value * saturation;
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (h.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = value - c;
    [r, g, b].map(|v| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// Backdrop color model. A pixel is background when its hue falls in any
/// range and both saturation and value reach their minimums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HsvThresholds {
    /// `[lo, hi]` in degrees; `lo > hi` wraps through 0.
    pub hue_ranges: Vec<[f64; 2]>,
    pub sat_min: f64,
    pub val_min: f64,
}

impl Default for HsvThresholds {
    fn default() -> Self {
        Self { hue_ranges: vec![[0.0, 12.0], [348.0, 360.0]], sat_min: 0.45, val_min: 0.20 }
    }
}

impl HsvThresholds {
    pub fn validate(&self) -> Result<(), ChromaError> {
        if self.hue_ranges.is_empty() {
            return Err(ChromaError::InvalidThresholds("hue_ranges needs at least one interval".into()));
        }
        for &[lo, hi] in &self.hue_ranges {
            if !(0.0..360.0).contains(&lo) || !(0.0..=360.0).contains(&hi) {
                return Err(ChromaError::InvalidThresholds(format!("hue range [{lo}, {hi}] outside [0, 360)")));
            }
        }
        for (name, v) in [("sat_min", self.sat_min), ("val_min", self.val_min)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ChromaError::InvalidThresholds(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_background(&self, rgb: [u8; 3]) -> bool {
        let (h, s, v) = rgb_to_hsv(rgb);
        s >= self.sat_min
            && v >= self.val_min
            && self.hue_ranges.iter().any(|&[lo, hi]| if lo <= hi { lo <= h && h <= hi } else { h >= lo || h <= hi })
    }
}

/// Foreground mask: complement of the thresholded backdrop.
pub fn chroma_mask(image: &RgbImage, thresholds: &HsvThresholds) -> Mask {
    let bits = image.pixels().map(|p| !thresholds.is_background(p.0)).collect();
    Mask::from_bits(image.width(), image.height(), bits)
}

/// Binary structuring element anchored at its center cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorphKernel {
    /// Rows of the element; all rows must have equal, odd length.
    pub shape: Vec<Vec<bool>>,
    pub iterations_open: u32,
    pub iterations_close: u32,
}

impl Default for MorphKernel {
    fn default() -> Self {
        Self::square(3)
    }
}

impl MorphKernel {
    pub fn square(side: usize) -> Self {
        Self { shape: vec![vec![true; side]; side], iterations_open: 1, iterations_close: 1 }
    }

    pub fn validate(&self) -> Result<(), ChromaError> {
        let rows = self.shape.len();
        let cols = self.shape.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || self.shape.iter().any(|r| r.len() != cols) {
            return Err(ChromaError::InvalidKernel("shape must be a non-empty rectangle".into()));
        }
        if rows.is_multiple_of(2) || cols.is_multiple_of(2) {
            return Err(ChromaError::InvalidKernel("shape needs odd dimensions to have a center".into()));
        }
        if !self.shape[rows / 2][cols / 2] {
            return Err(ChromaError::InvalidKernel("shape must contain its center".into()));
        }
        Ok(())
    }

    /// `(dx, dy)` offsets of the set cells relative to the center.
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        let (cy, cx) = (self.shape.len() as i64 / 2, self.shape[0].len() as i64 / 2);
        let mut out = Vec::new();
        for (r, row) in self.shape.iter().enumerate() {
            for (c, &set) in row.iter().enumerate() {
                if set {
                    out.push((c as i64 - cx, r as i64 - cy));
                }
            }
        }
        out
    }
}

/// Shared pass: `op(p)` folds `mask(p + sign·b)` over kernel offsets,
/// skipping taps outside the frame.
fn morph_pass(mask: &Mask, offsets: &[(i64, i64)], sign: i64, identity: bool) -> Mask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let src = mask.bits();
    let mut out = vec![identity; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = identity;
            for &(dx, dy) in offsets {
                let (sx, sy) = (x + sign * dx, y + sign * dy);
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    continue;
                }
                let v = src[(sy * w + sx) as usize];
                if v != identity {
                    acc = v;
                    break;
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    Mask::from_bits(mask.width(), mask.height(), out)
}

/// `{p : p + b ∈ mask for every in-frame p + b}`.
pub fn erode(mask: &Mask, kernel: &MorphKernel) -> Mask {
    morph_pass(mask, &kernel.offsets(), 1, true)
}

/// `{p + b : p ∈ mask}` restricted to the frame.
pub fn dilate(mask: &Mask, kernel: &MorphKernel) -> Mask {
    morph_pass(mask, &kernel.offsets(), -1, false)
}

/// Erosion then dilation, each repeated `iterations_open` times.
pub fn morph_open(mask: &Mask, kernel: &MorphKernel) -> Mask {
    let mut m = mask.clone();
    for _ in 0..kernel.iterations_open {
        m = erode(&m, kernel);
    }
    for _ in 0..kernel.iterations_open {
        m = dilate(&m, kernel);
    }
    m
}

/// Dilation then erosion, each repeated `iterations_close` times.
pub fn morph_close(mask: &Mask, kernel: &MorphKernel) -> Mask {
    let mut m = mask.clone();
    for _ in 0..kernel.iterations_close {
        m = dilate(&m, kernel);
    }
    for _ in 0..kernel.iterations_close {
        m = erode(&m, kernel);
    }
    m
}

/// Opening followed by closing.
pub fn clean_mask(mask: &Mask, kernel: &MorphKernel) -> Mask {
    morph_close(&morph_open(mask, kernel), kernel)
}

/// Crops to the mask's bounds, rescales so the longer side spans
/// `fill_fraction · out_size`, and centers on a transparent square canvas.
pub fn cutout_normalize(image: &RgbImage, mask: &Mask, out_size: u32, fill_fraction: f64) -> Result<RgbaImage, ChromaError> {
    if image.dimensions() != (mask.width(), mask.height()) {
        return Err(ChromaError::SizeMismatch { image: image.dimensions(), mask: (mask.width(), mask.height()) });
    }
    let bbox = mask.bbox().ok_or(ChromaError::EmptyMask)?;
    let (bw, bh) = (bbox.width(), bbox.height());
    let scale = fill_fraction * out_size as f64 / bw.max(bh) as f64;
    let nw = ((bw as f64 * scale).round() as u32).clamp(1, out_size);
    let nh = ((bh as f64 * scale).round() as u32).clamp(1, out_size);

    let crop = image::imageops::crop_imm(image, bbox.x_min, bbox.y_min, bw, bh).to_image();
    let alpha = GrayImage::from_fn(bw, bh, |x, y| Luma([if mask.get(bbox.x_min + x, bbox.y_min + y) { 255 } else { 0 }]));
    let color = resample::resize(&crop, nw, nh);
    let alpha = resample::resize(&alpha, nw, nh);

    let (ox, oy) = ((out_size - nw) / 2, (out_size - nh) / 2);
    let mut out = RgbaImage::new(out_size, out_size);
    for y in 0..nh {
        for x in 0..nw {
            if alpha.get_pixel(x, y)[0] >= 128 {
                let [r, g, b] = color.get_pixel(x, y).0;
                out.put_pixel(ox + x, oy + y, Rgba([r, g, b, 255]));
            }
        }
    }
    Ok(out)
}

/// Alpha ≥ 128 keeps the foreground; everything else becomes `background`.
pub fn composite(rgba: &RgbaImage, background: [u8; 3]) -> RgbImage {
    RgbImage::from_fn(rgba.width(), rgba.height(), |x, y| {
        let [r, g, b, a] = rgba.get_pixel(x, y).0;
        Rgb(if a >= 128 { [r, g, b] } else { background })
    })
}

/// Full backdrop-to-cutout pipeline. Returns the cutout and the cleaned
/// full-frame mask.
pub fn cutout(
    image: &RgbImage,
    thresholds: &HsvThresholds,
    kernel: &MorphKernel,
    out_size: u32,
    fill_fraction: f64,
) -> Result<(RgbaImage, Mask), ChromaError> {
    thresholds.validate()?;
    kernel.validate()?;
    let mask = clean_mask(&chroma_mask(image, thresholds), kernel);
    let out = cutout_normalize(image, &mask, out_size, fill_fraction)?;
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsv_primaries() {
        assert_eq!(rgb_to_hsv([255, 0, 0]), (0.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv([0, 255, 0]), (120.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv([0, 0, 255]), (240.0, 1.0, 1.0));
        let (h, s, v) = rgb_to_hsv([128, 128, 128]);
        assert_eq!((h, s), (0.0, 0.0));
        assert!((v - 0.502).abs() < 1e-3);
    }

    #[test]
    fn hue_just_below_red_wraps() {
        let (h, _, _) = rgb_to_hsv([255, 0, 1]);
        assert!(h > 359.0 && h < 360.0);
    }

    #[test]
    fn red_image_is_all_background() {
        let img = RgbImage::from_pixel(8, 8, Rgb([255, 0, 0]));
        assert!(chroma_mask(&img, &HsvThresholds::default()).is_empty());
    }

    #[test]
    fn no_red_means_full_mask() {
        let img = RgbImage::from_fn(8, 8, |x, y| Rgb([0, (x * 30) as u8, (y * 30) as u8]));
        assert_eq!(chroma_mask(&img, &HsvThresholds::default()).count(), 64);
    }

    #[test]
    fn wraparound_interval() {
        let t = HsvThresholds { hue_ranges: vec![[350.0, 10.0]], ..Default::default() };
        assert!(t.is_background([255, 0, 20]));
        assert!(t.is_background([255, 20, 0]));
        assert!(!t.is_background([0, 255, 0]));
    }

    #[test]
    fn singleton_removed_by_opening() {
        let mut m = Mask::new(9, 9);
        m.set(4, 4, true);
        assert!(morph_open(&m, &MorphKernel::default()).is_empty());
    }

    #[test]
    fn full_mask_survives_closing() {
        let m = Mask::full(9, 7);
        assert_eq!(morph_close(&m, &MorphKernel::default()), m);
        assert_eq!(morph_open(&m, &MorphKernel::default()), m);
    }

    #[test]
    fn closing_fills_pinhole() {
        let mut m = Mask::full(9, 9);
        m.set(4, 4, false);
        assert_eq!(morph_close(&m, &MorphKernel::default()), Mask::full(9, 9));
    }

    #[test]
    fn kernel_validation() {
        let k = MorphKernel { shape: vec![vec![true, false, true]], ..Default::default() };
        assert!(k.validate().is_err());
        let k = MorphKernel { shape: vec![vec![true, true]], ..Default::default() };
        assert!(k.validate().is_err());
        assert!(MorphKernel::default().validate().is_ok());
    }

    #[test]
    fn full_frame_mask_cutout_spans_fill_fraction() {
        let img = RgbImage::from_pixel(50, 40, Rgb([10, 20, 30]));
        let out = cutout_normalize(&img, &Mask::full(50, 40), 200, 0.5).unwrap();
        let alpha = Mask::from_fn(200, 200, |x, y| out.get_pixel(x, y)[3] == 255);
        let b = alpha.bbox().unwrap();
        assert_eq!(b.width(), 100);
        assert_eq!(b.height(), 80);
        assert_eq!(out.get_pixel(100, 100).0, [10, 20, 30, 255]);
    }

    #[test]
    fn empty_mask_cutout_fails() {
        let img = RgbImage::new(10, 10);
        assert_eq!(cutout_normalize(&img, &Mask::new(10, 10), 64, 0.9), Err(ChromaError::EmptyMask));
    }

    #[test]
    fn composite_extremes() {
        let opaque = RgbaImage::from_pixel(4, 4, Rgba([1, 2, 3, 255]));
        assert!(composite(&opaque, [9, 9, 9]).pixels().all(|p| p.0 == [1, 2, 3]));
        let clear = RgbaImage::from_pixel(4, 4, Rgba([1, 2, 3, 0]));
        assert!(composite(&clear, [10, 20, 30]).pixels().all(|p| p.0 == [10, 20, 30]));
    }
}
