//! Headless z-buffered triangle rasterizer with pixel-exact auto-labels.
//!
//! Conventions:
//! - camera at `(0, 0, camera_distance)` looking toward the origin, `+y` up;
//! - a pixel `(x, y)` is covered when its center `(x + 0.5, y + 0.5)` lies
//!   inside the projected triangle, with the top-left rule on edges;
//! - flat shading, back faces culled, no shadows, linear color.

use image::{RgbImage, RgbaImage};
use serde::{Deserialize, Serialize};

use crate::geom::{mat_mul, Vec3};
use crate::mask::{BBox, Mask};
use crate::mesh::Mesh;
use crate::scene::SceneParams;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RenderError {
    #[error("object not visible: no pixel covered")]
    ObjectNotVisible,
    #[error("invalid render config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    /// Use the per-sample color drawn into [`SceneParams`].
    Scene,
    Solid([u8; 3]),
    /// Leave the background black with alpha 0 in [`LabeledImage::rgba`].
    Transparent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub fov_vertical: f64,
    pub ambient: f64,
    pub near: f64,
    pub far: f64,
    pub background: Background,
    pub object_color: [u8; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            fov_vertical: 60.0,
            ambient: 0.25,
            near: 0.1,
            far: 100.0,
            background: Background::Scene,
            object_color: [200, 200, 200],
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidConfig(m));
        if self.width < 16 || self.height < 16 {
            return bad(format!("width and height must be at least 16, got {}x{}", self.width, self.height));
        }
        if !(self.fov_vertical > 0.0 && self.fov_vertical < 180.0) {
            return bad(format!("fov_vertical {} must lie in (0, 180)", self.fov_vertical));
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            return bad(format!("ambient {} must lie in [0, 1]", self.ambient));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return bad(format!("near {} / far {} must satisfy 0 < near < far", self.near, self.far));
        }
        Ok(())
    }
}

/// Rendered sample with its labels.
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub pixels: RgbImage,
    pub class_id: u32,
    pub mask: Mask,
    pub bbox: BBox,
    pub scene: SceneParams,
    pub transparent: bool,
}

impl LabeledImage {
    pub fn with_class(mut self, class_id: u32) -> Self {
        self.class_id = class_id;
        self
    }

    /// RGBA copy; alpha is 255 on the mask and, for transparent renders, 0 elsewhere.
    pub fn rgba(&self) -> RgbaImage {
        RgbaImage::from_fn(self.pixels.width(), self.pixels.height(), |x, y| {
            let [r, g, b] = self.pixels.get_pixel(x, y).0;
            let a = if !self.transparent || self.mask.get(x, y) { 255 } else { 0 };
            image::Rgba([r, g, b, a])
        })
    }
}

/// `clamp(ambient + intensity * max(0, n·l), 0, 1)`.
pub fn shade(normal: Vec3, light_direction: Vec3, intensity: f64, ambient: f64) -> f64 {
    (ambient + intensity * normal.dot(light_direction).max(0.0)).clamp(0.0, 1.0)
}

/// Pinhole camera for a given scene distance and frame.
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    pub width: u32,
    pub height: u32,
    /// `1 / tan(fov / 2)`.
    pub focal: f64,
    pub distance: f64,
}

impl Camera {
    pub fn new(cfg: &RenderConfig, distance: f64) -> Self {
        let focal = 1.0 / (cfg.fov_vertical.to_radians() * 0.5).tan();
        Self { width: cfg.width, height: cfg.height, focal, distance }
    }

    /// World point (already rotated into pose) to view space. The camera
    /// looks down `-z`; depth along the view axis is `-z`.
    #[inline]
    pub fn to_view(&self, p: Vec3) -> Vec3 {
        Vec3::new(p.x, p.y, p.z - self.distance)
    }

    /// View-space point to continuous screen coordinates `(sx, sy, depth)`,
    /// `y` growing downward. `None` when the point is not in front.
    #[inline]
    pub fn project_view(&self, v: Vec3) -> Option<(f64, f64, f64)> {
        let depth = -v.z;
        if depth <= 0.0 {
            return None;
        }
        let aspect = self.width as f64 / self.height as f64;
        let x_ndc = self.focal / aspect * v.x / depth;
        let y_ndc = self.focal * v.y / depth;
        let sx = (x_ndc + 1.0) * 0.5 * self.width as f64;
        let sy = (1.0 - y_ndc) * 0.5 * self.height as f64;
        Some((sx, sy, depth))
    }

    pub fn project(&self, world: Vec3) -> Option<(f64, f64, f64)> {
        self.project_view(self.to_view(world))
    }
}

/// Screen-space vertex: position plus view depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenVertex {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

/// `(b - a) × (p - a)` in screen space; positive on the interior side of a
/// positively oriented triangle.
#[inline]
fn edge(a: (f64, f64), b: (f64, f64), px: f64, py: f64) -> f64 {
    (b.0 - a.0) * (py - a.1) - (b.1 - a.1) * (px - a.0)
}

/// Edge owns pixel centers lying exactly on it (top or left edge, `y` down).
#[inline]
fn owns_boundary(a: (f64, f64), b: (f64, f64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

/// Calls `visit(x, y, w0, w1, w2)` for every covered pixel center, with
/// normalized barycentric weights. Either winding is accepted; zero-area
/// triangles cover nothing.
pub fn rasterize_triangle(
    p0: (f64, f64),
    p1: (f64, f64),
    p2: (f64, f64),
    width: u32,
    height: u32,
    mut visit: impl FnMut(u32, u32, f64, f64, f64),
) {
    let area = edge(p0, p1, p2.0, p2.1);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    // Orient so interior edge values are positive; remember the swap so
    // barycentric weights stay attached to the caller's vertices.
    let (q0, q1, q2, swapped) = if area > 0.0 { (p0, p1, p2, false) } else { (p0, p2, p1, true) };
    let area = area.abs();

    let min_x = q0.0.min(q1.0).min(q2.0);
    let max_x = q0.0.max(q1.0).max(q2.0);
    let min_y = q0.1.min(q1.1).min(q2.1);
    let max_y = q0.1.max(q1.1).max(q2.1);
    // Pixel x is a candidate when min_x <= x + 0.5 <= max_x.
    let x_lo = (min_x - 0.5).ceil().max(0.0);
    let x_hi = (max_x - 0.5).floor().min(width as f64 - 1.0);
    let y_lo = (min_y - 0.5).ceil().max(0.0);
    let y_hi = (max_y - 0.5).floor().min(height as f64 - 1.0);
    if x_lo > x_hi || y_lo > y_hi {
        return;
    }
    let (x_lo, x_hi, y_lo, y_hi) = (x_lo as u32, x_hi as u32, y_lo as u32, y_hi as u32);

    let own12 = owns_boundary(q1, q2);
    let own20 = owns_boundary(q2, q0);
    let own01 = owns_boundary(q0, q1);
    let inv_area = 1.0 / area;

    let edges = [(q1, q2), (q2, q0), (q0, q1)];
    for y in y_lo..=y_hi {
        let py = y as f64 + 0.5;
        // Narrow the row to where every edge is roughly non-negative; the
        // one-pixel slack keeps the exact test below authoritative.
        let (mut lo, mut hi) = (x_lo as f64, x_hi as f64);
        for (a, b) in edges {
            let slope = a.1 - b.1;
            if slope == 0.0 {
                continue;
            }
            let root = a.0 - (b.0 - a.0) * (py - a.1) / slope - 0.5;
            if slope > 0.0 {
                lo = lo.max(root.floor() - 1.0);
            } else {
                hi = hi.min(root.ceil() + 1.0);
            }
        }
        if lo > hi {
            continue;
        }
        for x in lo as u32..=hi as u32 {
            let px = x as f64 + 0.5;
            let e0 = edge(q1, q2, px, py);
            let e1 = edge(q2, q0, px, py);
            let e2 = edge(q0, q1, px, py);
            let inside = (e0 > 0.0 || (e0 == 0.0 && own12))
                && (e1 > 0.0 || (e1 == 0.0 && own20))
                && (e2 > 0.0 || (e2 == 0.0 && own01));
            if inside {
                let (w0, w1, w2) = (e0 * inv_area, e1 * inv_area, e2 * inv_area);
                if swapped {
                    visit(x, y, w0, w2, w1);
                } else {
                    visit(x, y, w0, w1, w2);
                }
            }
        }
    }
}

/// Clips a view-space triangle to `depth >= near` (Sutherland-Hodgman).
fn clip_near(tri: [Vec3; 3], near: f64, out: &mut Vec<Vec3>) {
    out.clear();
    let inside = |v: &Vec3| -v.z >= near;
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        match (inside(&a), inside(&b)) {
            (true, true) => out.push(b),
            (true, false) | (false, true) => {
                let t = (-near - a.z) / (b.z - a.z);
                out.push(a + (b - a) * t);
                if inside(&b) {
                    out.push(b);
                }
            }
            (false, false) => {}
        }
    }
}

/// Renders with the configured background.
pub fn render(mesh: &Mesh, scene: &SceneParams, cfg: &RenderConfig) -> Result<LabeledImage, RenderError> {
    render_with_backdrop(mesh, scene, cfg, None)
}

/// Renders over `backdrop` when given (must match the frame size).
pub fn render_with_backdrop(
    mesh: &Mesh,
    scene: &SceneParams,
    cfg: &RenderConfig,
    backdrop: Option<&RgbImage>,
) -> Result<LabeledImage, RenderError> {
    cfg.validate()?;
    let (w, h) = (cfg.width, cfg.height);
    if let Some(b) = backdrop {
        if b.dimensions() != (w, h) {
            return Err(RenderError::InvalidConfig(format!(
                "backdrop is {}x{}, frame is {w}x{h}",
                b.width(),
                b.height()
            )));
        }
    }
    let camera = Camera::new(cfg, scene.camera_distance);
    let rot = scene.rotation.to_matrix();

    let bg = match cfg.background {
        Background::Scene => scene.background_color,
        Background::Solid(c) => c,
        Background::Transparent => [0, 0, 0],
    };
    let mut pixels = match backdrop {
        Some(b) => b.clone(),
        None => RgbImage::from_pixel(w, h, image::Rgb(bg)),
    };
    let mut zbuf = vec![0.0f32; (w * h) as usize];
    let mut mask = Mask::new(w, h);

    let view: Vec<Vec3> = mesh.vertices.iter().map(|&v| camera.to_view(mat_mul(&rot, v))).collect();
    let min_inv_depth = (1.0 / cfg.far) as f32;
    let mut poly = Vec::with_capacity(4);

    for (t, n) in mesh.triangles.iter().zip(&mesh.normals) {
        let tri = [view[t[0] as usize], view[t[1] as usize], view[t[2] as usize]];
        let normal = mat_mul(&rot, *n);
        if normal.dot(tri[0]) >= 0.0 {
            continue;
        }
        let s = shade(normal, scene.light_direction, scene.light_intensity, cfg.ambient);
        let color = cfg.object_color.map(|c| (c as f64 * s).round().clamp(0.0, 255.0) as u8);

        clip_near(tri, cfg.near, &mut poly);
        if poly.len() < 3 {
            continue;
        }
        let projected: Vec<ScreenVertex> = poly
            .iter()
            .filter_map(|&v| camera.project_view(v))
            .map(|(x, y, depth)| ScreenVertex { x, y, depth })
            .collect();
        if projected.len() != poly.len() {
            continue;
        }
        for k in 1..projected.len() - 1 {
            let (a, b, c) = (projected[0], projected[k], projected[k + 1]);
            let (ia, ib, ic) = (1.0 / a.depth, 1.0 / b.depth, 1.0 / c.depth);
            rasterize_triangle((a.x, a.y), (b.x, b.y), (c.x, c.y), w, h, |x, y, w0, w1, w2| {
                let inv_depth = (w0 * ia + w1 * ib + w2 * ic) as f32;
                let idx = (y * w + x) as usize;
                if inv_depth >= min_inv_depth && inv_depth > zbuf[idx] {
                    zbuf[idx] = inv_depth;
                    mask.bits_mut()[idx] = true;
                    pixels.put_pixel(x, y, image::Rgb(color));
                }
            });
        }
    }

    let bbox = mask.bbox().ok_or(RenderError::ObjectNotVisible)?;
    Ok(LabeledImage {
        pixels,
        class_id: 0,
        mask,
        bbox,
        scene: scene.clone(),
        transparent: cfg.background == Background::Transparent && backdrop.is_none(),
    })
}
