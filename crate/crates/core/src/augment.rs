//! Training-time augmentation and zoom evaluation probes.
//!
//! [`augment`] applies rotation, side cropping, zoom and brightness in that
//! order, each with a parameter drawn from `(seed, index)`. All operations
//! keep the input dimensions.

use image::Pixel;
use serde::{Deserialize, Serialize};

use crate::resample::{self, Buffer, OutOfFrame};
use crate::rng::{tag, Stream};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AugmentError {
    #[error("invalid augment spec: {0}")]
    InvalidSpec(String),
    #[error("image is {0}x{1}; augmentation needs at least 16x16")]
    TooSmall(u32, u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSpec {
    /// Angles are drawn from `[0, rotation_max]` degrees.
    pub rotation_max: f64,
    /// Each side loses a fraction drawn from `[0, crop_max_frac]`.
    pub crop_max_frac: f64,
    pub brightness_range: [f64; 2],
    pub zoom_range: [f64; 2],
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self { rotation_max: 360.0, crop_max_frac: 0.30, brightness_range: [0.5, 1.2], zoom_range: [1.0, 1.5] }
    }
}

impl AugmentSpec {
    /// Spec whose every draw is the identity transform.
    pub fn identity() -> Self {
        Self { rotation_max: 0.0, crop_max_frac: 0.0, brightness_range: [1.0, 1.0], zoom_range: [1.0, 1.0] }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: String| Err(AugmentError::InvalidSpec(m));
        if !(self.rotation_max >= 0.0 && self.rotation_max <= 360.0) {
            return bad(format!("rotation_max {} must lie in [0, 360]", self.rotation_max));
        }
        if !(self.crop_max_frac >= 0.0 && self.crop_max_frac < 0.5) {
            return bad(format!("crop_max_frac {} must lie in [0, 0.5)", self.crop_max_frac));
        }
        for (name, [lo, hi]) in [("brightness_range", self.brightness_range), ("zoom_range", self.zoom_range)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("{name} [{lo}, {hi}] must satisfy 0 < lo <= hi"));
            }
        }
        Ok(())
    }
}

/// Fractions removed from each side before resizing back.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CropFractions {
    pub top: f64,
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
}

impl CropFractions {
    pub fn uniform(f: f64) -> Self {
        Self { top: f, bottom: f, left: f, right: f }
    }
}

/// One sample's drawn augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub angle: f64,
    pub crop: CropFractions,
    pub zoom: f64,
    pub brightness: f64,
}

const AUGMENT: u64 = tag("augment.params");

pub fn draw_params(spec: &AugmentSpec, seed: u64, index: u64) -> AugmentParams {
    let mut s = Stream::new(seed, index, AUGMENT);
    let angle = s.uniform(0.0, spec.rotation_max);
    let crop = CropFractions {
        top: s.uniform(0.0, spec.crop_max_frac),
        bottom: s.uniform(0.0, spec.crop_max_frac),
        left: s.uniform(0.0, spec.crop_max_frac),
        right: s.uniform(0.0, spec.crop_max_frac),
    };
    let zoom = s.uniform(spec.zoom_range[0], spec.zoom_range[1]);
    let brightness = s.uniform(spec.brightness_range[0], spec.brightness_range[1]);
    AugmentParams { angle, crop, zoom, brightness }
}

pub fn augment<P: Pixel<Subpixel = u8> + 'static>(
    image: &Buffer<P>,
    spec: &AugmentSpec,
    seed: u64,
    index: u64,
) -> Result<Buffer<P>, AugmentError> {
    spec.validate()?;
    if image.width() < 16 || image.height() < 16 {
        return Err(AugmentError::TooSmall(image.width(), image.height()));
    }
    Ok(apply(image, &draw_params(spec, seed, index)))
}

pub fn apply<P: Pixel<Subpixel = u8> + 'static>(image: &Buffer<P>, p: &AugmentParams) -> Buffer<P> {
    let out = rotate(image, p.angle);
    let out = crop_sides(&out, p.crop);
    let out = zoom_probe(&out, p.zoom);
    brightness(&out, p.brightness)
}

fn has_alpha<P: Pixel>() -> bool {
    P::CHANNEL_COUNT == 2 || P::CHANNEL_COUNT == 4
}

/// Exact sine and cosine at multiples of 90 degrees.
fn sin_cos_degrees(angle: f64) -> (f64, f64) {
    let a = angle.rem_euclid(360.0);
    if a == 0.0 {
        (0.0, 1.0)
    } else if a == 90.0 {
        (1.0, 0.0)
    } else if a == 180.0 {
        (0.0, -1.0)
    } else if a == 270.0 {
        (-1.0, 0.0)
    } else {
        a.to_radians().sin_cos()
    }
}

/// Counter-clockwise rotation about the image center with bilinear
/// resampling. Uncovered area replicates the edge, or is transparent for
/// images with alpha.
pub fn rotate<P: Pixel<Subpixel = u8> + 'static>(image: &Buffer<P>, angle: f64) -> Buffer<P> {
    let (s, c) = sin_cos_degrees(angle);
    if s == 0.0 && c == 1.0 {
        return image.clone();
    }
    let oof = if has_alpha::<P>() { OutOfFrame::Zero } else { OutOfFrame::Edge };
    let (cx, cy) = (image.width() as f64 * 0.5, image.height() as f64 * 0.5);
    // y grows downward, so a visual counter-clockwise turn samples the
    // source at R(-angle) in these coordinates.
    resample::remap(image, image.width(), image.height(), oof, |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        (cx + dx * c - dy * s, cy + dx * s + dy * c)
    })
}

fn crop_px(frac: f64, dim: u32) -> u32 {
    (frac * dim as f64).round() as u32
}

/// Removes the given fraction from each side, then resizes back.
pub fn crop_sides<P: Pixel<Subpixel = u8> + 'static>(image: &Buffer<P>, f: CropFractions) -> Buffer<P> {
    let (w, h) = image.dimensions();
    let (t, b) = (crop_px(f.top, h), crop_px(f.bottom, h));
    let (l, r) = (crop_px(f.left, w), crop_px(f.right, w));
    if t + b + l + r == 0 {
        return image.clone();
    }
    let cw = w.saturating_sub(l + r).max(1);
    let ch = h.saturating_sub(t + b).max(1);
    let inner = image::imageops::crop_imm(image, l.min(w - 1), t.min(h - 1), cw, ch).to_image();
    resample::resize(&inner, w, h)
}

/// `factor > 1` zooms in on a centered `1/factor` window; `factor < 1`
/// shrinks the content onto a centered window padded by edge replication.
pub fn zoom_probe<P: Pixel<Subpixel = u8> + 'static>(image: &Buffer<P>, factor: f64) -> Buffer<P> {
    let (w, h) = image.dimensions();
    if factor == 1.0 || factor.is_nan() || factor <= 0.0 {
        return image.clone();
    }
    let scaled = |d: u32, k: f64| ((d as f64 * k + 1e-9).floor() as u32).clamp(1, d.max(1));
    if factor > 1.0 {
        let (cw, ch) = (scaled(w, 1.0 / factor), scaled(h, 1.0 / factor));
        let inner = image::imageops::crop_imm(image, (w - cw) / 2, (h - ch) / 2, cw, ch).to_image();
        resample::resize(&inner, w, h)
    } else {
        let (nw, nh) = (scaled(w, factor), scaled(h, factor));
        let small = resample::resize(image, nw, nh);
        let (ox, oy) = (((w - nw) / 2) as i64, ((h - nh) / 2) as i64);
        Buffer::<P>::from_fn(w, h, |x, y| {
            let sx = (x as i64 - ox).clamp(0, nw as i64 - 1) as u32;
            let sy = (y as i64 - oy).clamp(0, nh as i64 - 1) as u32;
            *small.get_pixel(sx, sy)
        })
    }
}

/// Multiplies color channels by `factor`, rounding and clamping at 255.
/// Alpha is untouched.
pub fn brightness<P: Pixel<Subpixel = u8> + 'static>(image: &Buffer<P>, factor: f64) -> Buffer<P> {
    if factor == 1.0 {
        return image.clone();
    }
    let color_channels = if has_alpha::<P>() { P::CHANNEL_COUNT as usize - 1 } else { P::CHANNEL_COUNT as usize };
    let mut out = image.clone();
    for p in out.pixels_mut() {
        for c in p.channels_mut().iter_mut().take(color_channels) {
            *c = (*c as f64 * factor).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}
