//! Per-sample scene randomization.
//!
//! Every [`SceneParams`] is a pure function of `(seed, index, attempt)` and
//! the [`RandomizationSpec`]. Mesh geometry never feeds the random draws, so
//! all classes rendered at the same `(seed, index)` share pose, lighting and
//! background.

use serde::{Deserialize, Serialize};

use crate::geom::{Quat, Vec3};
use crate::rng::{mix64, tag, Stream};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SceneError {
    #[error("invalid randomization spec: {0}")]
    InvalidSpec(String),
    #[error("invalid vertical field of view {0} degrees; must lie in (0, 180)")]
    InvalidFov(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// Camera distance drawn uniformly from `distance_range`.
    VariableScale,
    /// Camera distance chosen so the bounding sphere fills the frame.
    FixedScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationSpec {
    pub mode: ScaleMode,
    pub distance_range: [f64; 2],
    pub fill_fraction: f64,
    pub intensity_range: [f64; 2],
    pub fov_vertical: f64,
    /// Size of the backdrop-image pool; 0 means solid-color backgrounds only.
    pub backdrop_count: u32,
}

impl Default for RandomizationSpec {
    fn default() -> Self {
        Self {
            mode: ScaleMode::FixedScale,
            distance_range: [2.5, 8.0],
            fill_fraction: 0.95,
            intensity_range: [0.5, 1.5],
            fov_vertical: 60.0,
            backdrop_count: 0,
        }
    }
}

impl RandomizationSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidSpec(m.to_string()));
        let [d_min, d_max] = self.distance_range;
        if !(d_min > 0.0 && d_min <= d_max && d_max.is_finite()) {
            return bad("distance_range must satisfy 0 < d_min <= d_max");
        }
        if !(self.fill_fraction > 0.0 && self.fill_fraction <= 1.0) {
            return bad("fill_fraction must lie in (0, 1]");
        }
        let [i_min, i_max] = self.intensity_range;
        if !(i_min >= 0.0 && i_min <= i_max && i_max.is_finite()) {
            return bad("intensity_range must satisfy 0 <= i_min <= i_max");
        }
        if !(self.fov_vertical > 0.0 && self.fov_vertical < 180.0) {
            return Err(SceneError::InvalidFov(self.fov_vertical));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub rotation: Quat,
    pub camera_distance: f64,
    /// Unit vector pointing from the object toward the light.
    pub light_direction: Vec3,
    pub light_intensity: f64,
    pub background_color: [u8; 3],
    /// Index into the backdrop pool when one is configured.
    pub backdrop: Option<u32>,
    pub sample_index: u64,
    /// Rejection re-draw number; 0 for the first draw.
    pub attempt: u32,
}

/// Camera distance at which a sphere of `radius` spans `fill_fraction` of
/// the vertical frame: `radius / (fill_fraction * sin(fov / 2))`.
///
/// At `fill_fraction = 1` the sphere's silhouette touches the frame edges
/// exactly; below 1 the silhouette is slightly smaller than the fraction,
/// never larger.
pub fn fill_frame_distance(radius: f64, fov_vertical: f64, fill_fraction: f64) -> Result<f64, SceneError> {
    if !(fov_vertical > 0.0 && fov_vertical < 180.0) {
        return Err(SceneError::InvalidFov(fov_vertical));
    }
    if radius.is_nan() || radius <= 0.0 || !(fill_fraction > 0.0 && fill_fraction <= 1.0) {
        return Err(SceneError::InvalidSpec(format!(
            "radius {radius} and fill_fraction {fill_fraction} must be positive, fill <= 1"
        )));
    }
    let half = (fov_vertical * 0.5).to_radians();
    Ok(radius / (fill_fraction * half.sin()))
}

/// Uniform random rotation from three uniform variates (Shoemake).
pub fn random_rotation(stream: &mut Stream) -> Quat {
    let u1 = stream.next_f64();
    let u2 = stream.next_f64();
    let u3 = stream.next_f64();
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (s2, c2) = (std::f64::consts::TAU * u2).sin_cos();
    let (s3, c3) = (std::f64::consts::TAU * u3).sin_cos();
    Quat { w: a * s2, x: a * c2, y: b * s3, z: b * c3 }.normalized()
}

/// Uniform direction on the hemisphere `y >= 0`.
fn upper_hemisphere(stream: &mut Stream) -> Vec3 {
    let y = stream.next_f64();
    let phi = std::f64::consts::TAU * stream.next_f64();
    let r = (1.0 - y * y).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), y, r * phi.sin()).normalized().unwrap_or(Vec3::new(0.0, 1.0, 0.0))
}

const ROTATION: u64 = tag("scene.rotation");
const DISTANCE: u64 = tag("scene.distance");
const LIGHT: u64 = tag("scene.light");
const BACKGROUND: u64 = tag("scene.background");

fn field_stream(seed: u64, index: u64, field: u64, attempt: u32) -> Stream {
    Stream::new(seed, index, mix64(field ^ attempt as u64))
}

pub fn scene_params(
    seed: u64,
    index: u64,
    spec: &RandomizationSpec,
    object_radius: f64,
) -> Result<SceneParams, SceneError> {
    scene_params_attempt(seed, index, 0, spec, object_radius)
}

/// Draw for a rejection re-try. `attempt = 0` is the regular draw.
pub fn scene_params_attempt(
    seed: u64,
    index: u64,
    attempt: u32,
    spec: &RandomizationSpec,
    object_radius: f64,
) -> Result<SceneParams, SceneError> {
    spec.validate()?;
    if object_radius.is_nan() || object_radius <= 0.0 {
        return Err(SceneError::InvalidSpec(format!("object radius {object_radius} must be positive")));
    }
    let rotation = random_rotation(&mut field_stream(seed, index, ROTATION, attempt));

    let mut dist = field_stream(seed, index, DISTANCE, attempt);
    let camera_distance = match spec.mode {
        ScaleMode::FixedScale => fill_frame_distance(object_radius, spec.fov_vertical, spec.fill_fraction)?,
        ScaleMode::VariableScale => dist.uniform(spec.distance_range[0], spec.distance_range[1]),
    };

    let mut light = field_stream(seed, index, LIGHT, attempt);
    let light_direction = upper_hemisphere(&mut light);
    let light_intensity = light.uniform(spec.intensity_range[0], spec.intensity_range[1]);

    let mut bg = field_stream(seed, index, BACKGROUND, attempt);
    let background_color = [bg.below(256) as u8, bg.below(256) as u8, bg.below(256) as u8];
    let backdrop = (spec.backdrop_count > 0).then(|| bg.below(spec.backdrop_count as u64) as u32);

    Ok(SceneParams {
        rotation,
        camera_distance,
        light_direction,
        light_intensity,
        background_color,
        backdrop,
        sample_index: index,
        attempt,
    })
}
