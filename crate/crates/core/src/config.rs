//! Run configuration: one JSON document holding every sub-spec, with a
//! stable digest recorded in all produced artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::AugmentSpec;
use crate::chroma::{HsvThresholds, MorphKernel};
use crate::dataset::SplitPlan;
use crate::mesh::{normalize_mesh, Mesh, MeshError};
use crate::render::RenderConfig;
use crate::scene::RandomizationSpec;
use crate::shapes;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} is not valid JSON for a run configuration: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("mesh for class {class:?}: {source}")]
    Mesh {
        class: String,
        #[source]
        source: MeshError,
    },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    /// Mesh file path (relative to the config file) or `builtin:<name>`.
    pub mesh: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoutSpec {
    pub out_size: u32,
    /// Longest bbox side as a fraction of `out_size`.
    pub fill_fraction: f64,
}

impl Default for CutoutSpec {
    fn default() -> Self {
        Self { out_size: 224, fill_fraction: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub classes: Vec<ClassSpec>,
    pub seed: u64,
    pub n_per_class: u32,
    pub spec: RandomizationSpec,
    pub render: RenderConfig,
    pub thresholds: HsvThresholds,
    pub kernel: MorphKernel,
    pub cutout: CutoutSpec,
    pub augment: AugmentSpec,
    pub split: SplitPlan,
    /// Not part of the digest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Not part of the digest; outputs do not depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            classes: shapes::BUILTIN_NAMES
                .iter()
                .map(|n| ClassSpec { name: n.to_string(), mesh: format!("{}{n}", shapes::BUILTIN_PREFIX) })
                .collect(),
            seed: 0,
            n_per_class: 100,
            spec: RandomizationSpec::default(),
            render: RenderConfig::default(),
            thresholds: HsvThresholds::default(),
            kernel: MorphKernel::default(),
            cutout: CutoutSpec::default(),
            augment: AugmentSpec::default(),
            split: SplitPlan::default(),
            output_dir: None,
            workers: None,
            base_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Unreadable { path: path.display().to_string(), source })?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.classes.is_empty() {
            return Err(invalid("classes", "at least one class is required"));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, c) in self.classes.iter().enumerate() {
            let valid_name = !c.name.is_empty()
                && c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-' || ch == '.')
                && c.name != "."
                && c.name != "..";
            if !valid_name {
                return Err(invalid(&format!("classes[{i}].name"), format!("{:?} is not a usable directory name", c.name)));
            }
            if !seen.insert(&c.name) {
                return Err(invalid(&format!("classes[{i}].name"), format!("duplicate class {:?}", c.name)));
            }
            if c.mesh.is_empty() {
                return Err(invalid(&format!("classes[{i}].mesh"), "empty mesh path"));
            }
        }
        if self.n_per_class == 0 {
            return Err(invalid("n_per_class", "must be at least 1"));
        }
        self.spec.validate().map_err(|e| invalid("spec", e))?;
        self.render.validate().map_err(|e| invalid("render", e))?;
        if self.spec.fov_vertical != self.render.fov_vertical {
            return Err(invalid(
                "spec.fov_vertical",
                format!(
                    "{} differs from render.fov_vertical {}; framing and projection must share one field of view",
                    self.spec.fov_vertical, self.render.fov_vertical
                ),
            ));
        }
        if self.spec.mode == crate::scene::ScaleMode::VariableScale && self.spec.distance_range[0] <= self.render.near {
            return Err(invalid("spec.distance_range", "minimum distance must exceed render.near"));
        }
        self.thresholds.validate().map_err(|e| invalid("thresholds", e))?;
        self.kernel.validate().map_err(|e| invalid("kernel", e))?;
        if self.cutout.out_size < 16 {
            return Err(invalid("cutout.out_size", "must be at least 16"));
        }
        if !(self.cutout.fill_fraction > 0.0 && self.cutout.fill_fraction <= 1.0) {
            return Err(invalid("cutout.fill_fraction", "must lie in (0, 1]"));
        }
        self.augment.validate().map_err(|e| invalid("augment", e))?;
        self.split.validate().map_err(|e| invalid("split", e))?;
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// Canonical JSON (sorted keys, no whitespace) of everything that can
    /// affect outputs.
    pub fn canonical_json(&self) -> String {
        let mut digestible = self.clone();
        digestible.output_dir = None;
        digestible.workers = None;
        canonical_json(&digestible)
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }

    /// Loads and normalizes every class mesh, in class order.
    pub fn load_meshes(&self) -> Result<Vec<Mesh>, ConfigError> {
        self.classes
            .iter()
            .map(|c| {
                let source = if c.mesh.starts_with(shapes::BUILTIN_PREFIX) {
                    c.mesh.clone()
                } else {
                    match &self.base_dir {
                        Some(base) if Path::new(&c.mesh).is_relative() => base.join(&c.mesh).display().to_string(),
                        _ => c.mesh.clone(),
                    }
                };
                shapes::resolve(&source)
                    .and_then(|m| normalize_mesh(&m))
                    .map_err(|source| ConfigError::Mesh { class: c.name.clone(), source })
            })
            .collect()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }
}

/// Serializes through `serde_json::Value`, whose maps are key-ordered.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes");
    serde_json::to_string(&v).expect("value serializes")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn hash_ignores_output_dir_and_workers() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = Some("/tmp/elsewhere".into());
        b.workers = Some(4);
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn hash_survives_json_round_trip() {
        let a = RunConfig::default();
        let b = RunConfig::from_json(&a.to_json_pretty(), "mem").unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = RunConfig::default();
        c.render.width = 8;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("`render`"), "{msg}");

        let mut c = RunConfig::default();
        c.spec.fov_vertical = 45.0;
        assert!(c.validate().unwrap_err().to_string().contains("spec.fov_vertical"));

        let mut c = RunConfig::default();
        c.classes[1].name = c.classes[0].name.clone();
        assert!(c.validate().unwrap_err().to_string().contains("classes[1].name"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"seeed": 3}"#, "mem").is_err());
        let c = RunConfig::from_json(r#"{"seed": 3}"#, "mem").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.classes.len(), 5);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn builtin_meshes_load_normalized() {
        let meshes = RunConfig::default().load_meshes().unwrap();
        for m in meshes {
            let r = crate::mesh::bounding_sphere(&m).unwrap().radius;
            assert!((r - 1.0).abs() < 1e-9);
        }
    }
}
