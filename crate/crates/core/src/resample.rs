//! Bilinear sampling shared by the chroma and augment modules.
//!
//! Pixel `i` covers `[i, i + 1)` and has its center at `i + 0.5`. Sampling at
//! an exact pixel center returns that pixel unchanged.

use image::{ImageBuffer, Pixel};

/// How taps outside the source are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutOfFrame {
    /// Replicate the nearest edge pixel.
    Edge,
    /// All channels zero (transparent for RGBA).
    Zero,
}

pub type Buffer<P> = ImageBuffer<P, Vec<u8>>;

#[inline]
fn tap<P: Pixel<Subpixel = u8>>(img: &Buffer<P>, x: i64, y: i64, oof: OutOfFrame, out: &mut [f64; 4], w: f64) {
    let (iw, ih) = (img.width() as i64, img.height() as i64);
    let (x, y) = match oof {
        OutOfFrame::Edge => (x.clamp(0, iw - 1), y.clamp(0, ih - 1)),
        OutOfFrame::Zero => {
            if x < 0 || y < 0 || x >= iw || y >= ih {
                return;
            }
            (x, y)
        }
    };
    for (o, &c) in out.iter_mut().zip(img.get_pixel(x as u32, y as u32).channels()) {
        *o += w * c as f64;
    }
}

/// Bilinear sample at continuous position `(sx, sy)`.
pub fn sample<P: Pixel<Subpixel = u8>>(img: &Buffer<P>, sx: f64, sy: f64, oof: OutOfFrame) -> [f64; 4] {
    let u = sx - 0.5;
    let v = sy - 0.5;
    let x0 = u.floor();
    let y0 = v.floor();
    let fx = u - x0;
    let fy = v - y0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let mut acc = [0.0; 4];
    tap(img, x0, y0, oof, &mut acc, (1.0 - fx) * (1.0 - fy));
    if fx > 0.0 {
        tap(img, x0 + 1, y0, oof, &mut acc, fx * (1.0 - fy));
    }
    if fy > 0.0 {
        tap(img, x0, y0 + 1, oof, &mut acc, (1.0 - fx) * fy);
        if fx > 0.0 {
            tap(img, x0 + 1, y0 + 1, oof, &mut acc, fx * fy);
        }
    }
    acc
}

pub fn to_pixel<P: Pixel<Subpixel = u8>>(acc: [f64; 4]) -> P {
    let mut p = *P::from_slice(&[0u8; 4][..P::CHANNEL_COUNT as usize]);
    for (c, v) in p.channels_mut().iter_mut().zip(acc) {
        *c = v.round().clamp(0.0, 255.0) as u8;
    }
    p
}

/// Builds a `width` × `height` image whose pixel `(x, y)` samples the source
/// at `map(x + 0.5, y + 0.5)`.
pub fn remap<P: Pixel<Subpixel = u8>>(
    img: &Buffer<P>,
    width: u32,
    height: u32,
    oof: OutOfFrame,
    map: impl Fn(f64, f64) -> (f64, f64),
) -> Buffer<P> {
    ImageBuffer::from_fn(width, height, |x, y| {
        let (sx, sy) = map(x as f64 + 0.5, y as f64 + 0.5);
        to_pixel(sample(img, sx, sy, oof))
    })
}

/// Bilinear resize with edge replication.
pub fn resize<P: Pixel<Subpixel = u8>>(img: &Buffer<P>, width: u32, height: u32) -> Buffer<P> {
    if img.dimensions() == (width, height) {
        return img.clone();
    }
    let kx = img.width() as f64 / width as f64;
    let ky = img.height() as f64 / height as f64;
    remap(img, width, height, OutOfFrame::Edge, |x, y| (x * kx, y * ky))
}
