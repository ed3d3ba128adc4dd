//! Render throughput measurement.

use std::time::Instant;

use serde::Serialize;

use crate::dataset::{render_sample, DatasetError};
use crate::mesh::Mesh;
use crate::par::map_indexed;
use crate::render::RenderConfig;
use crate::scene::RandomizationSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub images: usize,
    pub workers: usize,
    pub width: u32,
    pub height: u32,
    pub triangles: usize,
    pub total_seconds: f64,
    pub ms_per_image: f64,
    pub images_per_second: f64,
}

/// Renders `n` samples (no encoding or disk I/O) and times the batch.
pub fn measure(
    mesh: &Mesh,
    spec: &RandomizationSpec,
    cfg: &RenderConfig,
    seed: u64,
    n: usize,
    workers: usize,
) -> Result<BenchReport, DatasetError> {
    if n == 0 {
        return Err(DatasetError::InvalidArgument("bench needs at least one image".into()));
    }
    let start = Instant::now();
    let covered = map_indexed(n, workers, |i| {
        render_sample(mesh, "bench", 0, seed, i as u64, spec, cfg).map(|img| img.mask.count())
    });
    let total = start.elapsed().as_secs_f64();
    for c in covered {
        c?;
    }
    Ok(BenchReport {
        images: n,
        workers,
        width: cfg.width,
        height: cfg.height,
        triangles: mesh.triangles.len(),
        total_seconds: total,
        ms_per_image: total * 1000.0 / n as f64,
        images_per_second: n as f64 / total.max(f64::MIN_POSITIVE),
    })
}

/// Throughput of `report` relative to `baseline`.
pub fn speedup(report: &BenchReport, baseline: &BenchReport) -> f64 {
    report.images_per_second / baseline.images_per_second
}
