//! Synthetic maps for benchmarks and tests.

use std::collections::HashMap;

use crate::math3d::Vec3;
use crate::scene::Mesh;

/// Face count of the icosphere subdivision level that `make_icosphere`
/// selects for `target_faces`: the smallest `20 * 4^k >= target_faces`.
pub fn icosphere_face_count(target_faces: u32) -> u32 {
    let mut count: u32 = 20;
    while count < target_faces {
        count *= 4;
    }
    count
}

/// Subdivided icosahedron with every vertex at exactly `radius` from the
/// origin. The subdivision level is the smallest `k` with
/// `20 * 4^k >= target_faces`.
pub fn make_icosphere(target_faces: u32, radius: f64) -> Mesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z))
    .collect();

    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    let mut levels = 0u32;
    let mut count = 20u32;
    while count < target_faces {
        count *= 4;
        levels += 1;
    }

    for _ in 0..levels {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = (vertices[a as usize] + vertices[b as usize]) * 0.5;
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut vertices);
            let bc = midpoint(f[1], f[2], &mut vertices);
            let ca = midpoint(f[2], f[0], &mut vertices);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }

    for v in &mut vertices {
        *v = v.normalized().expect("icosphere vertices are nonzero") * radius;
    }

    Mesh::new(vertices, faces).expect("icosphere construction is valid")
}

/// Two triangles covering `[-half_extent, half_extent]^2` at z = 0.
pub fn make_ground_plane(half_extent: f64) -> Mesh {
    let h = half_extent;
    Mesh::new(
        vec![
            Vec3::new(-h, -h, 0.0),
            Vec3::new(h, -h, 0.0),
            Vec3::new(h, h, 0.0),
            Vec3::new(-h, h, 0.0),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .expect("ground plane is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_icosahedron_at_target_20() {
        let m = make_icosphere(20, 1.0);
        assert_eq!(m.face_count(), 20);
        assert_eq!(m.vertex_count(), 12);
    }

    #[test]
    fn face_count_sequence() {
        assert_eq!(icosphere_face_count(20), 20);
        assert_eq!(icosphere_face_count(21), 80);
        assert_eq!(icosphere_face_count(10_000), 20_480);
        // Smallest 20 * 4^k >= 1e6 is k = 8.
        assert_eq!(icosphere_face_count(1_000_000), 1_310_720);
        let m = make_icosphere(1_000, 2.0);
        assert_eq!(m.face_count(), icosphere_face_count(1_000) as usize);
    }

    #[test]
    fn all_vertices_on_the_sphere() {
        let radius = 7.25;
        let m = make_icosphere(500, radius);
        for v in m.vertices() {
            assert!((v.norm() - radius).abs() <= 1e-9);
        }
    }

    #[test]
    fn ground_plane_shape() {
        let m = make_ground_plane(100.0);
        assert_eq!(m.face_count(), 2);
        assert_eq!(m.vertex_count(), 4);
        for f in m.faces() {
            let (v0, v1, v2) = (
                m.vertices()[f[0] as usize],
                m.vertices()[f[1] as usize],
                m.vertices()[f[2] as usize],
            );
            let n = (v1 - v0).cross(v2 - v0).normalized().unwrap();
            assert!(n.z.abs() > 1.0 - 1e-12, "normal must be +-z");
        }
    }

    #[test]
    fn ground_plane_straight_down_range() {
        use crate::bvh::closest_hit;
        use crate::math3d::Ray;
        use crate::scene::Scene;
        let mut s = Scene::new();
        s.add_geometry(make_ground_plane(100.0)).unwrap();
        s.commit();
        let ray = Ray::new(Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.0, 0.0, -1.0), 0.0, 1e9);
        let hit = closest_hit(&s, &ray).unwrap().unwrap();
        assert!((hit.t - 0.5).abs() < 1e-12);
    }
}
