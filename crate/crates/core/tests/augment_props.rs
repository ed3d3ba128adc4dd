//! Augmentation parameter ranges and transform geometry.

use image::{imageops, Rgb, RgbImage, Rgba, RgbaImage};
use proptest::prelude::*;
use synthforge::augment::{
    apply, augment, brightness, crop_sides, draw_params, rotate, zoom_probe, AugmentSpec, CropFractions,
};
use synthforge::resample::resize;

fn pattern(w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| Rgb([(x * 7 % 256) as u8, (y * 13 % 256) as u8, ((x * y) % 251) as u8]))
}

#[test]
fn drawn_parameters_stay_in_range() {
    let spec = AugmentSpec::default();
    let mut seen_high_zoom = false;
    for i in 0..10_000 {
        let p = draw_params(&spec, 42, i);
        assert!((0.0..=360.0).contains(&p.angle));
        for f in [p.crop.top, p.crop.bottom, p.crop.left, p.crop.right] {
            assert!((0.0..=0.30).contains(&f));
        }
        assert!((1.0..=1.5).contains(&p.zoom));
        assert!((0.5..=1.2).contains(&p.brightness));
        seen_high_zoom |= p.zoom > 1.45;
    }
    assert!(seen_high_zoom);
}

proptest! {
    #[test]
    fn identity_spec_is_a_no_op(w in 16u32..48, h in 16u32..48, seed in any::<u64>(), index in any::<u64>()) {
        let img = pattern(w, h);
        prop_assert_eq!(augment(&img, &AugmentSpec::identity(), seed, index).unwrap(), img);
    }

    #[test]
    fn output_keeps_input_size(w in 16u32..64, h in 16u32..64, seed in any::<u64>()) {
        let img = pattern(w, h);
        let out = augment(&img, &AugmentSpec::default(), seed, 0).unwrap();
        prop_assert_eq!(out.dimensions(), (w, h));
    }

    #[test]
    fn right_angle_rotations_permute_pixels(n in 2u32..14, k in 1u32..4) {
        let img = pattern(n, n);
        let out = rotate(&img, 90.0 * k as f64);
        let m = n - 1;
        for (x, y, p) in out.enumerate_pixels() {
            let (sx, sy) = match k {
                1 => (m - y, x),
                2 => (m - x, m - y),
                _ => (y, m - x),
            };
            prop_assert_eq!(p, img.get_pixel(sx, sy));
        }
    }

    #[test]
    fn augmentation_is_reproducible(seed in any::<u64>(), index in any::<u64>()) {
        let img = pattern(24, 20);
        let spec = AugmentSpec::default();
        prop_assert_eq!(augment(&img, &spec, seed, index).unwrap(), augment(&img, &spec, seed, index).unwrap());
        prop_assert_eq!(apply(&img, &draw_params(&spec, seed, index)), augment(&img, &spec, seed, index).unwrap());
    }
}

#[test]
fn brightness_examples() {
    let a = brightness(&RgbImage::from_pixel(4, 4, Rgb([200, 200, 200])), 0.5);
    assert!(a.pixels().all(|p| p.0 == [100, 100, 100]));
    let b = brightness(&RgbImage::from_pixel(4, 4, Rgb([250, 250, 250])), 1.2);
    assert!(b.pixels().all(|p| p.0 == [255, 255, 255]));
}

#[test]
fn top_crop_matches_manual_slice() {
    let img = pattern(100, 100);
    let got = crop_sides(&img, CropFractions { top: 0.1, ..CropFractions::default() });
    let want = resize(&imageops::crop_imm(&img, 0, 10, 100, 90).to_image(), 100, 100);
    assert_eq!(got, want);
    assert_eq!(crop_sides(&img, CropFractions::default()), img);
    let interior = resize(&imageops::crop_imm(&img, 30, 30, 40, 40).to_image(), 100, 100);
    assert_eq!(crop_sides(&img, CropFractions::uniform(0.30)), interior);
}

#[test]
fn zoom_out_centers_downscaled_content() {
    let img = pattern(100, 100);
    let out = zoom_probe(&img, 0.5);
    let small = resize(&img, 50, 50);
    for y in 0..100u32 {
        for x in 0..100u32 {
            let (sx, sy) = (x.saturating_sub(25).min(49), y.saturating_sub(25).min(49));
            assert_eq!(out.get_pixel(x, y), small.get_pixel(sx, sy), "({x}, {y})");
        }
    }
    assert_eq!(zoom_probe(&img, 1.0), img);
}

#[test]
fn zoom_in_drops_the_corners() {
    let mut img = RgbImage::from_pixel(100, 100, Rgb([10, 10, 10]));
    img.put_pixel(0, 0, Rgb([255, 0, 0]));
    img.put_pixel(99, 99, Rgb([255, 0, 0]));
    let out = zoom_probe(&img, 1.5);
    assert!(out.pixels().all(|p| p.0 == [10, 10, 10]));
    let pat = pattern(100, 100);
    let want = resize(&imageops::crop_imm(&pat, 17, 17, 66, 66).to_image(), 100, 100);
    assert_eq!(zoom_probe(&pat, 1.5), want);
}

#[test]
fn rgba_rotation_fills_transparent() {
    let img = RgbaImage::from_pixel(32, 32, Rgba([50, 60, 70, 255]));
    let out = rotate(&img, 45.0);
    assert_eq!(out.get_pixel(0, 0).0[3], 0);
    assert_eq!(out.get_pixel(16, 16).0, [50, 60, 70, 255]);
}
