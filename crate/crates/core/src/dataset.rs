//! Dataset generation, manifests, train/validation splits and nested
//! subsampling.
//!
//! On-disk layout of a generated set:
//!
//! ```text
//! out/manifest.jsonl          one ManifestRecord per line, ordered by (class, index)
//! out/manifest.header.json    ManifestHeader
//! out/<class>/<index:06>.png
//! out/<class>/<index:06>_mask.png
//! ```

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use image::{GrayImage, Rgb, RgbImage, RgbaImage};
use serde::{Deserialize, Serialize};

use crate::augment::{self, AugmentSpec};
use crate::chroma::{self, HsvThresholds};
use crate::config::{canonical_json, sha256_hex, RunConfig};
use crate::mesh::Mesh;
use crate::par::map_indexed;
use crate::render::{render_with_backdrop, Background, LabeledImage, RenderConfig, RenderError};
use crate::rng::{tag, Stream};
use crate::scene::{scene_params_attempt, RandomizationSpec, SceneError};

pub const MANIFEST_VERSION: u32 = 1;
/// Scene draws tried per sample before giving up.
pub const MAX_ATTEMPTS: u32 = 8;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("class {class:?} index {index}: object not visible after {attempts} attempts")]
    RenderRejectionExhausted { class: String, index: u64, attempts: u32 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("manifest {path} line {line}: {message}")]
    ManifestParse { path: String, line: usize, message: String },
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("class {class:?} has {available} samples, {required} required")]
    TooFewSamples { class: String, available: usize, required: usize },
    #[error("config hash mismatch: expected {expected}, found {found}")]
    MixedConfigHash { expected: String, found: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Chroma(#[from] chroma::ChromaError),
    #[error(transparent)]
    Augment(#[from] augment::AugmentError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

fn img_err(path: &Path) -> impl FnOnce(image::ImageError) -> DatasetError + '_ {
    move |source| DatasetError::Image { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    /// Not yet split.
    All,
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    /// Relative to the header's `image_root`.
    pub path: String,
    pub class_id: u32,
    pub class_name: String,
    pub split: Split,
    pub seed: u64,
    pub index: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub version: u32,
    pub created: String,
    pub spec: RandomizationSpec,
    pub render: RenderConfig,
    pub thresholds: HsvThresholds,
    pub augment: AugmentSpec,
    pub config_hash: String,
    /// What produced this manifest: `generate`, `train`, `val`, `subsample`, `cutout`, `augment`.
    pub kind: String,
    pub classes: Vec<String>,
    /// Record count per class id.
    pub counts: Vec<u64>,
    /// Directory holding the images, relative to the manifest file unless absolute.
    #[serde(default = "default_root")]
    pub image_root: String,
    /// Hash of the manifest this one was derived from, for cutout and augment outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_hash: Option<String>,
}

fn default_root() -> String {
    ".".to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<ManifestRecord>,
}

/// `created` timestamp: `SOURCE_DATE_EPOCH` when set, else the Unix epoch,
/// so reruns stay byte-identical.
pub fn created_timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok()).unwrap_or(0);
    chrono::DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Header and records file names for a manifest stem.
pub fn manifest_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.jsonl")), dir.join(format!("{stem}.header.json")))
}

fn header_path_for(records_path: &Path) -> PathBuf {
    let name = records_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.strip_suffix(".jsonl").unwrap_or(&name);
    records_path.with_file_name(format!("{stem}.header.json"))
}

impl Manifest {
    pub fn counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.header.classes.len()];
        for r in &self.records {
            if let Some(slot) = c.get_mut(r.class_id as usize) {
                *slot += 1;
            }
        }
        c
    }

    fn refresh_counts(&mut self) {
        self.header.counts = self.counts();
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DatasetError::ManifestInvalid(m));
        let mut paths = HashSet::new();
        for r in &self.records {
            if !paths.insert(&r.path) {
                return bad(format!("duplicate path {}", r.path));
            }
            if r.config_hash != self.header.config_hash {
                return Err(DatasetError::MixedConfigHash {
                    expected: self.header.config_hash.clone(),
                    found: r.config_hash.clone(),
                });
            }
            match self.header.classes.get(r.class_id as usize) {
                Some(name) if *name == r.class_name => {}
                _ => return bad(format!("{}: class {} {:?} not in header", r.path, r.class_id, r.class_name)),
            }
        }
        if self.counts() != self.header.counts {
            return bad(format!("header counts {:?} disagree with records {:?}", self.header.counts, self.counts()));
        }
        Ok(())
    }

    /// Absolute or manifest-relative location of a record's image.
    pub fn image_path(&self, manifest_dir: &Path, record: &ManifestRecord) -> PathBuf {
        manifest_dir.join(&self.header.image_root).join(&record.path)
    }

    /// Writes `<stem>.jsonl` and `<stem>.header.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let (records_path, header_path) = manifest_paths(dir, stem);
        let mut header = serde_json::to_string_pretty(&self.header).expect("header serializes");
        header.push('\n');
        std::fs::write(&header_path, header).map_err(io_err(&header_path))?;
        let file = std::fs::File::create(&records_path).map_err(io_err(&records_path))?;
        let mut w = std::io::BufWriter::new(file);
        for r in &self.records {
            let line = serde_json::to_string(r).expect("record serializes");
            writeln!(w, "{line}").map_err(io_err(&records_path))?;
        }
        w.flush().map_err(io_err(&records_path))?;
        Ok(records_path)
    }

    /// Reads a records file and its sibling header, then validates.
    pub fn read(records_path: impl AsRef<Path>) -> Result<Self> {
        let records_path = records_path.as_ref();
        let header_path = header_path_for(records_path);
        let header_text = std::fs::read_to_string(&header_path).map_err(io_err(&header_path))?;
        let header: ManifestHeader = serde_json::from_str(&header_text).map_err(|e| DatasetError::ManifestParse {
            path: header_path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let file = std::fs::File::open(records_path).map_err(io_err(records_path))?;
        let mut records = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(records_path))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ManifestRecord = serde_json::from_str(&line).map_err(|e| DatasetError::ManifestParse {
                path: records_path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(r);
        }
        let m = Manifest { header, records };
        m.validate()?;
        Ok(m)
    }

    fn derived(&self, kind: &str, records: Vec<ManifestRecord>) -> Manifest {
        let mut header = self.header.clone();
        header.kind = kind.to_string();
        let mut m = Manifest { header, records };
        m.refresh_counts();
        m
    }
}

/// Errors unless every manifest carries the same config hash.
pub fn ensure_same_hash<'a>(manifests: impl IntoIterator<Item = &'a Manifest>) -> Result<()> {
    let mut expected: Option<&str> = None;
    for m in manifests {
        match expected {
            None => expected = Some(&m.header.config_hash),
            Some(e) if e != m.header.config_hash => {
                return Err(DatasetError::MixedConfigHash {
                    expected: e.to_string(),
                    found: m.header.config_hash.clone(),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Digest for an artifact derived from `parent_hash` with `params`.
pub fn derived_hash<T: Serialize>(parent_hash: &str, kind: &str, params: &T) -> String {
    sha256_hex(format!("{parent_hash}\n{kind}\n{}", canonical_json(params)).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitPlan {
    pub train_fraction: f64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self { train_fraction: 0.8 }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(DatasetError::InvalidArgument(format!(
                "train_fraction {} must lie in (0, 1]",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Training samples for a class of `total`: `ceil(train_fraction · total)`.
    pub fn train_count(&self, total: usize) -> usize {
        // The slack absorbs products like 0.8 * 5 landing a hair above 4.
        let exact = self.train_fraction * total as f64;
        ((exact - 1e-9).ceil().max(0.0) as usize).min(total)
    }
}

fn by_class(m: &Manifest) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); m.header.classes.len()];
    for (i, r) in m.records.iter().enumerate() {
        groups[r.class_id as usize].push(i);
    }
    groups
}

fn class_permutation(members: &[usize], seed: u64, class_id: usize, purpose: u64) -> Vec<usize> {
    let mut order = members.to_vec();
    Stream::new(seed, class_id as u64, purpose).shuffle(&mut order);
    order
}

/// Per-class seeded shuffle; the first `ceil(f · N)` of each class train.
/// Both outputs keep the input's record order.
pub fn split(manifest: &Manifest, plan: &SplitPlan, seed: u64) -> Result<(Manifest, Manifest)> {
    plan.validate()?;
    if plan.train_fraction == 1.0 {
        log::warn!("train_fraction 1.0 leaves the validation split empty");
    }
    let mut is_train = vec![false; manifest.records.len()];
    for (class_id, members) in by_class(manifest).iter().enumerate() {
        if members.len() < 2 {
            return Err(DatasetError::TooFewSamples {
                class: manifest.header.classes[class_id].clone(),
                available: members.len(),
                required: 2,
            });
        }
        let order = class_permutation(members, seed, class_id, tag("dataset.split"));
        for &i in &order[..plan.train_count(members.len())] {
            is_train[i] = true;
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (r, t) in manifest.records.iter().zip(is_train) {
        let mut r = r.clone();
        if t {
            r.split = Split::Train;
            train.push(r);
        } else {
            r.split = Split::Val;
            val.push(r);
        }
    }
    Ok((manifest.derived("train", train), manifest.derived("val", val)))
}

/// Batch size for `n_per_class` training images per class.
pub fn recommended_batch_size(n_per_class: usize) -> usize {
    match n_per_class {
        96 => 64,
        48 => 32,
        24 => 16,
        12 => 8,
        n => {
            // Largest power of two p with p <= 2n/3, at least 1.
            let mut p = 1usize;
            while 3 * (p * 2) <= 2 * n {
                p *= 2;
            }
            p
        }
    }
}

/// First `n_per_class` entries of a per-class seeded permutation. The
/// permutation does not depend on `n_per_class`, so smaller subsamples are
/// subsets of larger ones.
pub fn subsample(manifest: &Manifest, n_per_class: usize, seed: u64) -> Result<(Manifest, usize)> {
    if n_per_class == 0 {
        return Err(DatasetError::InvalidArgument("n_per_class must be at least 1".into()));
    }
    let mut keep = vec![false; manifest.records.len()];
    for (class_id, members) in by_class(manifest).iter().enumerate() {
        if members.len() < n_per_class {
            return Err(DatasetError::TooFewSamples {
                class: manifest.header.classes[class_id].clone(),
                available: members.len(),
                required: n_per_class,
            });
        }
        let order = class_permutation(members, seed, class_id, tag("dataset.subsample"));
        for &i in &order[..n_per_class] {
            keep[i] = true;
        }
    }
    let records = manifest.records.iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r.clone()).collect();
    Ok((manifest.derived("subsample", records), recommended_batch_size(n_per_class)))
}

/// Procedural backdrop `k` of the pool: a two-color diagonal gradient with
/// a checker overlay.
pub fn backdrop_image(seed: u64, k: u32, width: u32, height: u32) -> RgbImage {
    let mut s = Stream::new(seed, k as u64, tag("dataset.backdrop"));
    let c0 = [s.below(256), s.below(256), s.below(256)];
    let c1 = [s.below(256), s.below(256), s.below(256)];
    let cell = 8 + s.below(40);
    let (ax, ay) = (s.below(3), s.below(3));
    let span = (ax * width as u64 + ay * height as u64).max(1);
    RgbImage::from_fn(width, height, |x, y| {
        let t = ax * x as u64 + ay * y as u64;
        let checker = ((x as u64 / cell) + (y as u64 / cell)) % 2;
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let base = (c0[ch] * (span - t) + c1[ch] * t) / span;
            px[ch] = if checker == 1 { (base * 3 / 4) as u8 } else { base as u8 };
        }
        Rgb(px)
    })
}

/// Renders one sample, re-drawing the scene on rejection. Meshes must be
/// normalized (unit bounding radius).
pub fn render_sample(
    mesh: &Mesh,
    class_name: &str,
    class_id: u32,
    seed: u64,
    index: u64,
    spec: &RandomizationSpec,
    cfg: &RenderConfig,
) -> Result<LabeledImage> {
    for attempt in 0..MAX_ATTEMPTS {
        let scene = scene_params_attempt(seed, index, attempt, spec, 1.0)?;
        let backdrop = match (cfg.background, scene.backdrop) {
            (Background::Scene, Some(k)) => Some(backdrop_image(seed, k, cfg.width, cfg.height)),
            _ => None,
        };
        match render_with_backdrop(mesh, &scene, cfg, backdrop.as_ref()) {
            Ok(img) => return Ok(img.with_class(class_id)),
            Err(RenderError::ObjectNotVisible) => {
                log::debug!("{class_name}/{index}: attempt {attempt} not visible, re-drawing");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(DatasetError::RenderRejectionExhausted { class: class_name.to_string(), index, attempts: MAX_ATTEMPTS })
}

pub fn image_rel_path(class_name: &str, index: u64) -> String {
    format!("{class_name}/{index:06}.png")
}

pub fn mask_rel_path(image_rel: &str) -> String {
    match image_rel.strip_suffix(".png") {
        Some(stem) => format!("{stem}_mask.png"),
        None => format!("{image_rel}_mask.png"),
    }
}

fn save_png_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(img_err(path))
}

fn save_png_rgba(img: &RgbaImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(img_err(path))
}

fn save_png_luma(img: &GrayImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(img_err(path))
}

fn first_error(results: Vec<Result<()>>) -> Result<()> {
    results.into_iter().collect::<Result<Vec<()>>>().map(|_| ())
}

fn base_header(cfg: &RunConfig, kind: &str, config_hash: String) -> ManifestHeader {
    ManifestHeader {
        version: MANIFEST_VERSION,
        created: created_timestamp(),
        spec: cfg.spec.clone(),
        render: cfg.render.clone(),
        thresholds: cfg.thresholds.clone(),
        augment: cfg.augment.clone(),
        config_hash,
        kind: kind.to_string(),
        classes: cfg.class_names(),
        counts: Vec::new(),
        image_root: default_root(),
        parent_hash: None,
    }
}

/// Renders `n_per_class` samples per class into `out_dir` and writes
/// `manifest.jsonl`. Sample `i` of every class shares one scene draw.
pub fn generate_dataset(cfg: &RunConfig, meshes: &[Mesh], out_dir: &Path, workers: usize) -> Result<Manifest> {
    if meshes.len() != cfg.classes.len() || meshes.is_empty() {
        return Err(DatasetError::InvalidArgument(format!(
            "{} meshes for {} classes",
            meshes.len(),
            cfg.classes.len()
        )));
    }
    if cfg.n_per_class == 0 {
        return Err(DatasetError::InvalidArgument("n_per_class must be at least 1".into()));
    }
    for c in &cfg.classes {
        let d = out_dir.join(&c.name);
        std::fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let n = cfg.n_per_class as usize;
    let hash = cfg.config_hash();
    let transparent = cfg.render.background == Background::Transparent;
    let results = map_indexed(meshes.len() * n, workers, |task| {
        let (class_id, index) = (task / n, (task % n) as u64);
        let name = &cfg.classes[class_id].name;
        let img = render_sample(&meshes[class_id], name, class_id as u32, cfg.seed, index, &cfg.spec, &cfg.render)?;
        let rel = image_rel_path(name, index);
        let path = out_dir.join(&rel);
        if transparent {
            save_png_rgba(&img.rgba(), &path)?;
        } else {
            save_png_rgb(&img.pixels, &path)?;
        }
        save_png_luma(&img.mask.to_luma(), &out_dir.join(mask_rel_path(&rel)))
    });
    first_error(results)?;

    let mut records = Vec::with_capacity(meshes.len() * n);
    for (class_id, c) in cfg.classes.iter().enumerate() {
        for index in 0..n as u64 {
            records.push(ManifestRecord {
                path: image_rel_path(&c.name, index),
                class_id: class_id as u32,
                class_name: c.name.clone(),
                split: Split::All,
                seed: cfg.seed,
                index,
                config_hash: hash.clone(),
            });
        }
    }
    let mut m = Manifest { header: base_header(cfg, "generate", hash), records };
    m.refresh_counts();
    m.write(out_dir, "manifest")?;
    Ok(m)
}

#[derive(Serialize)]
struct CutoutParams<'a> {
    thresholds: &'a HsvThresholds,
    kernel: &'a chroma::MorphKernel,
    out_size: u32,
    fill_fraction: f64,
}

/// Chroma-keys every image of `source` and writes RGBA cutouts plus a
/// derived manifest into `out_dir`.
pub fn cutout_dataset(
    source: &Manifest,
    source_dir: &Path,
    cfg: &RunConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<Manifest> {
    cfg.thresholds.validate()?;
    cfg.kernel.validate()?;
    let params = CutoutParams {
        thresholds: &cfg.thresholds,
        kernel: &cfg.kernel,
        out_size: cfg.cutout.out_size,
        fill_fraction: cfg.cutout.fill_fraction,
    };
    let hash = derived_hash(&source.header.config_hash, "cutout", &params);
    for c in &source.header.classes {
        let d = out_dir.join(c);
        std::fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let results = map_indexed(source.records.len(), workers, |i| {
        let r = &source.records[i];
        let src = source.image_path(source_dir, r);
        let img = image::open(&src).map_err(img_err(&src))?.to_rgb8();
        let (rgba, _) =
            chroma::cutout(&img, &cfg.thresholds, &cfg.kernel, cfg.cutout.out_size, cfg.cutout.fill_fraction)
                .map_err(|e| DatasetError::InvalidArgument(format!("{}: {e}", src.display())))?;
        save_png_rgba(&rgba, &out_dir.join(&r.path))
    });
    first_error(results)?;
    let records = source.records.iter().map(|r| ManifestRecord { config_hash: hash.clone(), ..r.clone() }).collect();
    let mut m = source.derived("cutout", records);
    m.header.parent_hash = Some(source.header.config_hash.clone());
    m.header.config_hash = hash;
    m.header.image_root = default_root();
    m.header.created = created_timestamp();
    m.header.thresholds = cfg.thresholds.clone();
    m.write(out_dir, "manifest")?;
    Ok(m)
}

#[derive(Serialize)]
struct AugmentParamsDigest<'a> {
    spec: &'a AugmentSpec,
    seed: u64,
    copies: u32,
}

/// Writes `copies` augmented variants of every image. Variant `k` of record
/// `j` uses augmentation index `j · copies + k`.
pub fn augment_dataset(
    source: &Manifest,
    source_dir: &Path,
    spec: &AugmentSpec,
    seed: u64,
    copies: u32,
    out_dir: &Path,
    workers: usize,
) -> Result<Manifest> {
    spec.validate()?;
    if copies == 0 {
        return Err(DatasetError::InvalidArgument("copies must be at least 1".into()));
    }
    let hash = derived_hash(&source.header.config_hash, "augment", &AugmentParamsDigest { spec, seed, copies });
    for c in &source.header.classes {
        let d = out_dir.join(c);
        std::fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let rel_for = |r: &ManifestRecord, k: u32| {
        let stem = r.path.strip_suffix(".png").unwrap_or(&r.path);
        format!("{stem}_aug{k:02}.png")
    };
    let copies_us = copies as usize;
    let results = map_indexed(source.records.len(), workers, |j| {
        let r = &source.records[j];
        let src = source.image_path(source_dir, r);
        let img = image::open(&src).map_err(img_err(&src))?;
        for k in 0..copies {
            let idx = (j * copies_us + k as usize) as u64;
            let out = out_dir.join(rel_for(r, k));
            if img.color().has_alpha() {
                save_png_rgba(&augment::augment(&img.to_rgba8(), spec, seed, idx)?, &out)?;
            } else {
                save_png_rgb(&augment::augment(&img.to_rgb8(), spec, seed, idx)?, &out)?;
            }
        }
        Ok(())
    });
    first_error(results)?;
    let mut records = Vec::with_capacity(source.records.len() * copies_us);
    for (j, r) in source.records.iter().enumerate() {
        for k in 0..copies {
            records.push(ManifestRecord {
                path: rel_for(r, k),
                seed,
                index: (j * copies_us + k as usize) as u64,
                config_hash: hash.clone(),
                ..r.clone()
            });
        }
    }
    let mut m = source.derived("augment", records);
    m.header.parent_hash = Some(source.header.config_hash.clone());
    m.header.config_hash = hash;
    m.header.image_root = default_root();
    m.header.created = created_timestamp();
    m.header.augment = spec.clone();
    m.write(out_dir, "manifest")?;
    Ok(m)
}

/// Manifest records grouped by class name, for summaries.
pub fn summarize(m: &Manifest) -> BTreeMap<String, BTreeMap<String, u64>> {
    let mut out: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for r in &m.records {
        let split = serde_json::to_value(r.split).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        *out.entry(r.class_name.clone()).or_default().entry(split).or_default() += 1;
    }
    out
}

/// Loads a mask written next to an image.
pub fn read_mask(path: &Path) -> Result<crate::mask::Mask> {
    let img = image::open(path).map_err(img_err(path))?.to_luma8();
    Ok(crate::mask::Mask::from_luma(&img))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_manifest(classes: usize, per_class: u64) -> Manifest {
        let names: Vec<String> = (0..classes).map(|c| format!("c{c}")).collect();
        let mut records = Vec::new();
        for (cid, name) in names.iter().enumerate() {
            for i in 0..per_class {
                records.push(ManifestRecord {
                    path: image_rel_path(name, i),
                    class_id: cid as u32,
                    class_name: name.clone(),
                    split: Split::All,
                    seed: 1,
                    index: i,
                    config_hash: "h".into(),
                });
            }
        }
        let cfg = RunConfig::default();
        let mut header = base_header(&cfg, "generate", "h".into());
        header.classes = names;
        let mut m = Manifest { header, records };
        m.refresh_counts();
        m
    }

    #[test]
    fn table_split_counts() {
        let plan = SplitPlan::default();
        for (n, t) in [(96, 77), (48, 39), (24, 20), (12, 10)] {
            assert_eq!(plan.train_count(n), t);
            let (train, val) = split(&toy_manifest(3, n as u64), &plan, 5).unwrap();
            assert_eq!(train.counts(), vec![t as u64; 3]);
            assert_eq!(val.counts(), vec![(n - t) as u64; 3]);
        }
    }

    #[test]
    fn full_fraction_gives_empty_val() {
        let plan = SplitPlan { train_fraction: 1.0 };
        let (train, val) = split(&toy_manifest(2, 10), &plan, 0).unwrap();
        assert_eq!(train.records.len(), 20);
        assert!(val.records.is_empty());
    }

    #[test]
    fn split_needs_two_per_class() {
        assert!(matches!(
            split(&toy_manifest(2, 1), &SplitPlan::default(), 0),
            Err(DatasetError::TooFewSamples { available: 1, .. })
        ));
    }

    #[test]
    fn batch_sizes() {
        assert_eq!(recommended_batch_size(12), 8);
        assert_eq!(recommended_batch_size(96), 64);
        assert_eq!(recommended_batch_size(17), 8);
        assert_eq!(recommended_batch_size(1), 1);
        assert_eq!(recommended_batch_size(3), 2);
    }

    #[test]
    fn subsample_too_many() {
        assert!(matches!(subsample(&toy_manifest(2, 5), 6, 0), Err(DatasetError::TooFewSamples { .. })));
    }

    #[test]
    fn mixed_hash_is_detected() {
        let a = toy_manifest(1, 2);
        let mut b = a.clone();
        b.header.config_hash = "other".into();
        assert!(ensure_same_hash([&a, &a]).is_ok());
        assert!(matches!(ensure_same_hash([&a, &b]), Err(DatasetError::MixedConfigHash { .. })));
        b.header.config_hash = a.header.config_hash.clone();
        b.records[0].config_hash = "x".into();
        assert!(matches!(b.validate(), Err(DatasetError::MixedConfigHash { .. })));
    }

    #[test]
    fn duplicate_paths_are_invalid() {
        let mut m = toy_manifest(1, 2);
        m.records[1].path = m.records[0].path.clone();
        assert!(matches!(m.validate(), Err(DatasetError::ManifestInvalid(_))));
    }

    #[test]
    fn created_defaults_to_epoch() {
        if std::env::var("SOURCE_DATE_EPOCH").is_err() {
            assert_eq!(created_timestamp(), "1970-01-01T00:00:00Z");
        }
    }

    #[test]
    fn mask_paths() {
        assert_eq!(image_rel_path("cube", 7), "cube/000007.png");
        assert_eq!(mask_rel_path("cube/000007.png"), "cube/000007_mask.png");
    }
}
