//! Deterministic synthetic image datasets for object classification.
//!
//! Meshes are rendered under seeded, domain-randomized scenes with a CPU
//! rasterizer that emits pixel-exact masks. Companion modules cover
//! chroma-key cutouts, image augmentation, dataset manifests and splits, and
//! evaluation of classifier prediction logs.
//!
//! Every random draw comes from [`rng::Stream`], keyed by
//! `(seed, sample index, purpose)`, so outputs depend only on the
//! configuration and never on worker count or scheduling.

pub mod augment;
pub mod bench;
pub mod chroma;
pub mod config;
pub mod dataset;
pub mod evalkit;
pub mod geom;
pub mod mask;
pub mod mesh;
pub mod par;
pub mod render;
pub mod resample;
pub mod rng;
pub mod scene;
pub mod shapes;

pub use config::RunConfig;
pub use dataset::{Manifest, ManifestRecord};
pub use mask::{BBox, Mask};
pub use mesh::Mesh;
pub use render::{render, LabeledImage, RenderConfig};
pub use scene::{RandomizationSpec, SceneParams};
