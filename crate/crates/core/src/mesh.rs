//! Triangle meshes: OBJ and STL readers, normalization into the canonical
//! unit bounding sphere, and the bounding sphere itself.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::geom::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("cannot read mesh file {path}: {source}")]
    UnreadableFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed mesh data at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("mesh contains no triangles")]
    EmptyMesh,
    #[error("mesh is degenerate: all vertices coincide")]
    DegenerateMesh,
}

pub type Result<T> = std::result::Result<T, MeshError>;

/// Indexed triangle mesh with one outward unit normal per triangle.
///
/// Normals always follow the counter-clockwise winding convention:
/// `n · (v1 − v0) × (v2 − v0) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Vec<Vec3>,
    pub source_path: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Mesh {
    /// Builds a mesh from raw geometry, recomputing normals from winding.
    /// Zero-area triangles carry no orientation and are dropped.
    pub fn from_triangles(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        source_path: impl Into<String>,
    ) -> Result<Mesh> {
        let n = vertices.len();
        let mut kept = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        let mut dropped = 0usize;
        for t in triangles {
            if t.iter().any(|&i| i as usize >= n) {
                return Err(MeshError::Malformed {
                    line: 0,
                    message: format!("triangle {t:?} references a vertex beyond {n}"),
                });
            }
            match face_normal(&vertices, t) {
                Some(nrm) => {
                    kept.push(t);
                    normals.push(nrm);
                }
                None => dropped += 1,
            }
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} zero-area triangles");
        }
        if kept.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        Ok(Mesh { vertices, triangles: kept, normals, source_path: source_path.into() })
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn aabb(&self) -> (Vec3, Vec3) {
        let first = self.vertices[0];
        self.vertices.iter().fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

fn face_normal(vertices: &[Vec3], t: [u32; 3]) -> Option<Vec3> {
    let [a, b, c] = t.map(|i| vertices[i as usize]);
    (b - a).cross(c - a).normalized()
}

/// Reads an OBJ or STL file, chosen by extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    if ext != "obj" && ext != "stl" {
        return Err(MeshError::UnsupportedFormat(format!("{shown}: expected .obj or .stl")));
    }
    let bytes = std::fs::read(path)
        .map_err(|source| MeshError::UnreadableFile { path: shown.clone(), source })?;
    if ext == "obj" {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| MeshError::UnsupportedFormat(format!("{shown}: OBJ is not UTF-8")))?;
        parse_obj(text, &shown)
    } else {
        parse_stl(&bytes, &shown)
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| MeshError::Malformed { line, message: "missing coordinate".into() })?;
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| MeshError::Malformed { line, message: format!("bad number {tok:?}") })
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn obj_index(tok: &str, count: usize, line: usize) -> Result<usize> {
    let bad = || MeshError::Malformed { line, message: format!("bad index {tok:?}") };
    let raw: i64 = tok.parse().map_err(|_| bad())?;
    let idx = match raw {
        0 => return Err(bad()),
        r if r > 0 => r as usize - 1,
        r => {
            let back = r.unsigned_abs() as usize;
            if back > count {
                return Err(bad());
            }
            count - back
        }
    };
    if idx >= count {
        return Err(bad());
    }
    Ok(idx)
}

/// Parses `v`, `vn` and `f` records. Polygons are fan-triangulated. When a
/// face references vertex normals that disagree with its winding, the winding
/// is reversed so the recomputed normal matches the file's intent.
pub fn parse_obj(text: &str, source: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut vnormals: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("vn") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vnormals.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut corners = Vec::new();
                let mut hint = Vec3::ZERO;
                for tok in toks {
                    let mut parts = tok.split('/');
                    let v = obj_index(parts.next().unwrap_or(""), vertices.len(), line)?;
                    let _texcoord = parts.next();
                    if let Some(n) = parts.next().filter(|s| !s.is_empty()) {
                        hint = hint + vnormals[obj_index(n, vnormals.len(), line)?];
                    }
                    corners.push(v as u32);
                }
                if corners.len() < 3 {
                    return Err(MeshError::Malformed {
                        line,
                        message: "face needs at least three vertices".into(),
                    });
                }
                for k in 1..corners.len() - 1 {
                    let mut t = [corners[0], corners[k], corners[k + 1]];
                    if let Some(n) = face_normal(&vertices, t) {
                        if n.dot(hint) < 0.0 {
                            t.swap(1, 2);
                        }
                    }
                    triangles.push(t);
                }
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    Mesh::from_triangles(vertices, triangles, source)
}

/// Welds bit-identical corner positions into a shared vertex list.
#[derive(Default)]
struct Welder {
    vertices: Vec<Vec3>,
    seen: HashMap<[u64; 3], u32>,
}

impl Welder {
    fn add(&mut self, v: Vec3) -> u32 {
        let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
        let next = self.vertices.len() as u32;
        *self.seen.entry(key).or_insert_with(|| {
            self.vertices.push(v);
            next
        })
    }
}

/// Parses binary or ASCII STL. Stored facet normals are ignored.
pub fn parse_stl(bytes: &[u8], source: &str) -> Result<Mesh> {
    let binary_len = |n: usize| 84 + 50 * n;
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if bytes.len() == binary_len(count) {
            return parse_stl_binary(bytes, count, source);
        }
    }
    if bytes.starts_with(b"solid") {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| MeshError::UnsupportedFormat(format!("{source}: STL is neither ASCII nor binary")))?;
        return parse_stl_ascii(text, source);
    }
    Err(MeshError::UnsupportedFormat(format!(
        "{source}: binary STL size does not match its triangle count"
    )))
}

fn parse_stl_binary(bytes: &[u8], count: usize, source: &str) -> Result<Mesh> {
    if count == 0 {
        return Err(MeshError::EmptyMesh);
    }
    let mut welder = Welder::default();
    let mut triangles = Vec::with_capacity(count);
    for rec in bytes[84..].chunks_exact(50) {
        let f = |o: usize| f32::from_le_bytes([rec[o], rec[o + 1], rec[o + 2], rec[o + 3]]) as f64;
        let mut tri = [0u32; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let base = 12 + 12 * k;
            let v = Vec3::new(f(base), f(base + 4), f(base + 8));
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(MeshError::Malformed { line: 0, message: "non-finite STL vertex".into() });
            }
            *slot = welder.add(v);
        }
        triangles.push(tri);
    }
    Mesh::from_triangles(welder.vertices, triangles, source)
}

fn parse_stl_ascii(text: &str, source: &str) -> Result<Mesh> {
    let mut welder = Welder::default();
    let mut triangles = Vec::new();
    let mut corners = Vec::with_capacity(3);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("vertex") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                corners.push(welder.add(Vec3::new(x, y, z)));
            }
            Some("endfacet") => {
                if corners.len() != 3 {
                    return Err(MeshError::Malformed {
                        line,
                        message: format!("facet has {} vertices", corners.len()),
                    });
                }
                triangles.push([corners[0], corners[1], corners[2]]);
                corners.clear();
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    Mesh::from_triangles(welder.vertices, triangles, source)
}

/// Serializes as OBJ with `v` and `f` records only.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

/// Serializes as binary STL (80-byte header, 50-byte records).
pub fn write_stl_binary(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.triangles.len());
    let mut header = [0u8; 80];
    let label = b"synthforge binary stl";
    header[..label.len()].copy_from_slice(label);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for (i, n) in mesh.normals.iter().enumerate() {
        for v in std::iter::once(*n).chain(mesh.triangle(i)) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

/// AABB-centered sphere reaching the farthest vertex. Not the minimal
/// enclosing sphere.
pub fn bounding_sphere(mesh: &Mesh) -> Result<BoundingSphere> {
    let (lo, hi) = mesh.aabb();
    let extent = hi - lo;
    if extent.x <= 0.0 && extent.y <= 0.0 && extent.z <= 0.0 {
        return Err(MeshError::DegenerateMesh);
    }
    let center = (lo + hi) * 0.5;
    let radius = mesh.vertices.iter().map(|&v| (v - center).norm()).fold(0.0, f64::max);
    Ok(BoundingSphere { center, radius })
}

/// Recenters on the AABB center and scales the bounding sphere to radius 1.
pub fn normalize_mesh(mesh: &Mesh) -> Result<Mesh> {
    let sphere = bounding_sphere(mesh)?;
    let scale = 1.0 / sphere.radius;
    let mut vertices: Vec<Vec3> =
        mesh.vertices.iter().map(|&v| (v - sphere.center) * scale).collect();
    // Rounding can leave the farthest vertex a few ulps off the unit sphere.
    let far = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if far > 0.0 && far != 1.0 {
        for v in &mut vertices {
            *v = *v / far;
        }
    }
    Ok(Mesh {
        vertices,
        triangles: mesh.triangles.clone(),
        normals: mesh.normals.clone(),
        source_path: mesh.source_path.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE_OBJ: &str = "\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
";

    fn cube() -> Mesh {
        parse_obj(CUBE_OBJ, "cube.obj").unwrap()
    }

    #[test]
    fn obj_cube_topology() {
        let m = cube();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.triangles.len(), 12);
    }

    #[test]
    fn obj_cube_normals_point_outward() {
        let m = cube();
        let c = Vec3::new(0.5, 0.5, 0.5);
        for i in 0..m.triangles.len() {
            let [a, _, _] = m.triangle(i);
            assert!(m.normals[i].dot(a - c) > 0.0, "triangle {i} faces inward");
            assert!((m.normals[i].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn obj_without_faces_is_empty() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\n", "pts.obj").unwrap_err();
        assert!(matches!(err, MeshError::EmptyMesh));
    }

    #[test]
    fn obj_slash_indices_and_negative_refs() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf -3/1/1 -2/1/1 -1/1/1\n";
        let m = parse_obj(text, "t.obj").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn obj_vertex_normals_fix_winding() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 -1\nf 1//1 2//1 3//1\n";
        let m = parse_obj(text, "t.obj").unwrap();
        assert!(m.normals[0].z < 0.0);
        assert_eq!(m.triangles, vec![[0, 2, 1]]);
    }

    #[test]
    fn obj_index_out_of_range() {
        let err = parse_obj("v 0 0 0\nf 1 2 3\n", "bad.obj").unwrap_err();
        assert!(matches!(err, MeshError::Malformed { line: 2, .. }));
    }

    #[test]
    fn binary_stl_header_count() {
        let bytes = write_stl_binary(&cube());
        assert_eq!(bytes.len(), 84 + 50 * 12);
        let m = parse_stl(&bytes, "cube.stl").unwrap();
        assert_eq!(m.triangles.len(), 12);
        assert_eq!(m.vertices.len(), 8);
    }

    #[test]
    fn ascii_stl() {
        let text = "solid t\nfacet normal 0 0 0\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nvertex 0 1 0\nendloop\nendfacet\nendsolid t\n";
        let m = parse_stl(text.as_bytes(), "t.stl").unwrap();
        assert_eq!(m.triangles.len(), 1);
        assert!((m.normals[0].z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_binary_stl_rejected() {
        let mut bytes = write_stl_binary(&cube());
        bytes.truncate(bytes.len() - 10);
        assert!(matches!(parse_stl(&bytes, "x.stl"), Err(MeshError::UnsupportedFormat(_))));
    }

    #[test]
    fn unknown_extension() {
        assert!(matches!(load_mesh("thing.step"), Err(MeshError::UnsupportedFormat(_))));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_mesh("/nonexistent/a.obj"), Err(MeshError::UnreadableFile { .. })));
    }

    #[test]
    fn unit_cube_sphere() {
        let s = bounding_sphere(&cube()).unwrap();
        assert!((s.center - Vec3::new(0.5, 0.5, 0.5)).norm() < 1e-15);
        assert!((s.radius - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_triangle_sphere() {
        let verts = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0)];
        let m = Mesh::from_triangles(verts.clone(), vec![[0, 1, 2]], "tri").unwrap();
        let s = bounding_sphere(&m).unwrap();
        assert_eq!(s.center, Vec3::new(1.0, 1.0, 0.0));
        let oracle = verts.iter().map(|&v| (v - Vec3::new(1.0, 1.0, 0.0)).norm()).fold(0.0, f64::max);
        assert!((s.radius - oracle).abs() < 1e-15);
        assert!((s.radius - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalize_big_cube_scales_by_inverse_sqrt3() {
        let m = cube();
        let big = Mesh {
            vertices: m.vertices.iter().map(|&v| v * 2.0 - Vec3::new(1.0, 1.0, 1.0)).collect(),
            ..m
        };
        let n = normalize_mesh(&big).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for v in &n.vertices {
            assert!((v.x.abs() - s).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_removes_translation() {
        let m = cube();
        let moved = Mesh {
            vertices: m.vertices.iter().map(|&v| v + Vec3::new(4.5, 4.5, 4.5)).collect(),
            ..m.clone()
        };
        let a = normalize_mesh(&m).unwrap();
        let b = normalize_mesh(&moved).unwrap();
        for (p, q) in a.vertices.iter().zip(&b.vertices) {
            assert!((*p - *q).norm() < 1e-12);
        }
        let s = bounding_sphere(&b).unwrap();
        assert!(s.center.norm() < 1e-12);
    }

    #[test]
    fn coincident_vertices_are_degenerate() {
        let m = Mesh {
            vertices: vec![Vec3::new(1.0, 1.0, 1.0); 3],
            triangles: vec![[0, 1, 2]],
            normals: vec![Vec3::new(0.0, 0.0, 1.0)],
            source_path: String::new(),
        };
        assert!(matches!(normalize_mesh(&m), Err(MeshError::DegenerateMesh)));
    }

    #[test]
    fn zero_area_triangles_dropped() {
        let verts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let m = Mesh::from_triangles(verts, vec![[0, 1, 2], [0, 1, 3]], "x").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 3]]);
    }
}
