//! Bundled procedural test meshes standing in for real CAD parts.
//!
//! Every builtin is referenced as `builtin:<name>` wherever a mesh path is
//! accepted.

use crate::geom::Vec3;
use crate::mesh::{Mesh, MeshError};

pub const BUILTIN_PREFIX: &str = "builtin:";

pub const BUILTIN_NAMES: [&str; 5] =
    ["cube", "finned_box", "l_bracket", "cylinder_cluster", "plate_with_holes"];

#[derive(Default)]
struct Builder {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl Builder {
    fn vertex(&mut self, v: Vec3) -> u32 {
        self.vertices.push(v);
        self.vertices.len() as u32 - 1
    }

    /// Adds triangle `abc`, flipping it if needed so its normal has a
    /// positive component along `outward`.
    fn tri(&mut self, a: Vec3, b: Vec3, c: Vec3, outward: Vec3) {
        let n = (b - a).cross(c - a);
        let (b, c) = if n.dot(outward) < 0.0 { (c, b) } else { (b, c) };
        let ia = self.vertex(a);
        let ib = self.vertex(b);
        let ic = self.vertex(c);
        self.triangles.push([ia, ib, ic]);
    }

    /// Quad `abcd` given in cyclic order.
    fn quad(&mut self, a: Vec3, b: Vec3, c: Vec3, d: Vec3, outward: Vec3) {
        self.tri(a, b, c, outward);
        self.tri(a, c, d, outward);
    }

    fn cuboid(&mut self, lo: Vec3, hi: Vec3) {
        let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let (x0, y0, z0, x1, y1, z1) = (lo.x, lo.y, lo.z, hi.x, hi.y, hi.z);
        self.quad(p(x0, y0, z0), p(x1, y0, z0), p(x1, y1, z0), p(x0, y1, z0), p(0.0, 0.0, -1.0));
        self.quad(p(x0, y0, z1), p(x1, y0, z1), p(x1, y1, z1), p(x0, y1, z1), p(0.0, 0.0, 1.0));
        self.quad(p(x0, y0, z0), p(x1, y0, z0), p(x1, y0, z1), p(x0, y0, z1), p(0.0, -1.0, 0.0));
        self.quad(p(x0, y1, z0), p(x1, y1, z0), p(x1, y1, z1), p(x0, y1, z1), p(0.0, 1.0, 0.0));
        self.quad(p(x0, y0, z0), p(x0, y1, z0), p(x0, y1, z1), p(x0, y0, z1), p(-1.0, 0.0, 0.0));
        self.quad(p(x1, y0, z0), p(x1, y1, z0), p(x1, y1, z1), p(x1, y0, z1), p(1.0, 0.0, 0.0));
    }

    /// Closed z-aligned cylinder: `4 * segments` triangles.
    fn cylinder(&mut self, base: Vec3, radius: f64, height: f64, segments: usize) {
        let top = base + Vec3::new(0.0, 0.0, height);
        let ring = |k: usize, z: Vec3| {
            let a = std::f64::consts::TAU * k as f64 / segments as f64;
            z + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
        };
        for k in 0..segments {
            let (b0, b1) = (ring(k, base), ring(k + 1, base));
            let (t0, t1) = (ring(k, top), ring(k + 1, top));
            let mid = (b0 + b1) * 0.5 - base;
            self.quad(b0, b1, t1, t0, mid);
            self.tri(base, b0, b1, Vec3::new(0.0, 0.0, -1.0));
            self.tri(top, t0, t1, Vec3::new(0.0, 0.0, 1.0));
        }
    }

    fn finish(self, name: &str) -> Mesh {
        Mesh::from_triangles(self.vertices, self.triangles, format!("{BUILTIN_PREFIX}{name}"))
            .expect("builtin meshes are well formed")
    }
}

pub fn cube() -> Mesh {
    let mut b = Builder::default();
    b.cuboid(Vec3::new(-0.5, -0.5, -0.5), Vec3::new(0.5, 0.5, 0.5));
    b.finish("cube")
}

/// Housing with a row of cooling fins on top.
pub fn finned_box() -> Mesh {
    let mut b = Builder::default();
    b.cuboid(Vec3::new(-1.0, -0.6, -0.4), Vec3::new(1.0, 0.6, 0.2));
    for k in 0..5 {
        let x = -0.9 + 0.42 * k as f64;
        b.cuboid(Vec3::new(x, -0.6, 0.2), Vec3::new(x + 0.14, 0.6, 0.7));
    }
    b.finish("finned_box")
}

pub fn l_bracket() -> Mesh {
    let mut b = Builder::default();
    b.cuboid(Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.35, 1.0));
    b.cuboid(Vec3::new(0.0, 0.35, 0.0), Vec3::new(0.35, 1.6, 1.0));
    b.finish("l_bracket")
}

/// Seven finely tessellated cylinders; 5040 triangles, the bench mesh.
pub fn cylinder_cluster() -> Mesh {
    let mut b = Builder::default();
    let segments = 180;
    b.cylinder(Vec3::new(0.0, 0.0, 0.0), 0.35, 1.6, segments);
    for k in 0..6 {
        let a = std::f64::consts::TAU * k as f64 / 6.0;
        let h = 0.8 + 0.15 * k as f64;
        b.cylinder(Vec3::new(0.8 * a.cos(), 0.8 * a.sin(), 0.0), 0.25, h, segments);
    }
    b.finish("cylinder_cluster")
}

/// Mounting plate with square holes, built from a grid of solid cells.
pub fn plate_with_holes() -> Mesh {
    const N: usize = 8;
    const M: usize = 5;
    let holes = [(1, 1), (6, 1), (1, 3), (6, 3), (3, 2), (4, 2)];
    let solid =
        |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < N && (j as usize) < M && !holes.contains(&(i as usize, j as usize));
    let cell = 0.3;
    let t = 0.15;
    let mut b = Builder::default();
    for i in 0..N as isize {
        for j in 0..M as isize {
            if !solid(i, j) {
                continue;
            }
            let (x0, y0) = (i as f64 * cell, j as f64 * cell);
            let (x1, y1) = (x0 + cell, y0 + cell);
            let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
            b.quad(p(x0, y0, t), p(x1, y0, t), p(x1, y1, t), p(x0, y1, t), p(0.0, 0.0, 1.0));
            b.quad(p(x0, y0, 0.0), p(x1, y0, 0.0), p(x1, y1, 0.0), p(x0, y1, 0.0), p(0.0, 0.0, -1.0));
            if !solid(i - 1, j) {
                b.quad(p(x0, y0, 0.0), p(x0, y1, 0.0), p(x0, y1, t), p(x0, y0, t), p(-1.0, 0.0, 0.0));
            }
            if !solid(i + 1, j) {
                b.quad(p(x1, y0, 0.0), p(x1, y1, 0.0), p(x1, y1, t), p(x1, y0, t), p(1.0, 0.0, 0.0));
            }
            if !solid(i, j - 1) {
                b.quad(p(x0, y0, 0.0), p(x1, y0, 0.0), p(x1, y0, t), p(x0, y0, t), p(0.0, -1.0, 0.0));
            }
            if !solid(i, j + 1) {
                b.quad(p(x0, y1, 0.0), p(x1, y1, 0.0), p(x1, y1, t), p(x0, y1, t), p(0.0, 1.0, 0.0));
            }
        }
    }
    b.finish("plate_with_holes")
}

pub fn builtin(name: &str) -> Option<Mesh> {
    Some(match name {
        "cube" => cube(),
        "finned_box" => finned_box(),
        "l_bracket" => l_bracket(),
        "cylinder_cluster" => cylinder_cluster(),
        "plate_with_holes" => plate_with_holes(),
        _ => return None,
    })
}

/// Resolves `builtin:<name>` or loads a mesh file.
pub fn resolve(source: &str) -> Result<Mesh, MeshError> {
    match source.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => builtin(name)
            .ok_or_else(|| MeshError::UnsupportedFormat(format!("unknown builtin mesh {name:?}"))),
        None => crate::mesh::load_mesh(source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::bounding_sphere;

    #[test]
    fn builtins_have_outward_normals() {
        for name in BUILTIN_NAMES {
            let m = builtin(name).unwrap();
            let s = bounding_sphere(&m).unwrap();
            assert!(s.radius > 0.0);
            for (i, n) in m.normals.iter().enumerate() {
                let [a, b, c] = m.triangle(i);
                assert!(n.dot((b - a).cross(c - a)) > 0.0, "{name} triangle {i}");
            }
        }
    }

    #[test]
    fn bench_mesh_is_about_five_thousand_triangles() {
        assert_eq!(cylinder_cluster().triangles.len(), 5040);
    }

    #[test]
    fn resolve_rejects_unknown_builtin() {
        assert!(resolve("builtin:teapot").is_err());
        assert_eq!(resolve("builtin:cube").unwrap().triangles.len(), 12);
    }
}
