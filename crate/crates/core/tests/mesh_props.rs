//! Mesh I/O round trips and normalization.

use proptest::prelude::*;
use synthforge::geom::Vec3;
use synthforge::mesh::{bounding_sphere, normalize_mesh, parse_obj, parse_stl, write_obj, write_stl_binary, Mesh};
use synthforge::shapes;

fn random_mesh() -> impl Strategy<Value = Mesh> {
    prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 4..30).prop_flat_map(|pts| {
        let n = pts.len() as u32;
        let verts: Vec<Vec3> = pts.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
        prop::collection::vec((0..n, 0..n, 0..n), 1..40).prop_filter_map("non-degenerate", move |tris| {
            let tris: Vec<[u32; 3]> = tris.into_iter().filter(|(a, b, c)| a != b && b != c && a != c).map(|(a, b, c)| [a, b, c]).collect();
            Mesh::from_triangles(verts.clone(), tris, "prop").ok()
        })
    })
}

proptest! {
    #[test]
    fn obj_round_trip_is_exact(m in random_mesh()) {
        let back = parse_obj(&write_obj(&m), "prop").unwrap();
        prop_assert_eq!(back.vertices, m.vertices);
        prop_assert_eq!(back.triangles, m.triangles);
    }

    #[test]
    fn stl_round_trip_preserves_triangles(m in random_mesh()) {
        let back = parse_stl(&write_stl_binary(&m), "prop").unwrap();
        prop_assert_eq!(back.triangles.len(), m.triangles.len());
        for i in 0..m.triangles.len() {
            for (a, b) in back.triangle(i).iter().zip(m.triangle(i)) {
                prop_assert!((*a - b).norm() < 1e-4 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn normalization_gives_unit_radius_at_origin(m in random_mesh()) {
        let n = normalize_mesh(&m).unwrap();
        let s = bounding_sphere(&n).unwrap();
        prop_assert!((s.radius - 1.0).abs() < 1e-9);
        prop_assert!(s.center.norm() < 1e-9);
        let far = n.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!((far - 1.0).abs() < 1e-12);
    }
}

#[test]
fn builtin_shapes_have_outward_closed_surfaces() {
    for name in shapes::BUILTIN_NAMES {
        let m = shapes::builtin(name).unwrap();
        // Signed volume of a closed, outward-oriented surface is positive.
        let vol: f64 = (0..m.triangles.len())
            .map(|i| {
                let [a, b, c] = m.triangle(i);
                a.dot(b.cross(c)) / 6.0
            })
            .sum();
        assert!(vol > 0.0, "{name}: signed volume {vol}");
    }
}
