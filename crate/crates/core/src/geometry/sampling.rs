use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Mesh};
use crate::math::Vec3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Area-weighted uniform surface samples. Each draw picks a triangle by
/// inverting the cumulative area table, then a uniform barycentric point.
pub fn sample_mesh_surface(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud, GeometryError> {
    if mesh.triangles.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(GeometryError::EmptyMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * total;
        let t = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(t);
        let s = rng.random::<f64>().sqrt();
        let v = rng.random::<f64>();
        points.push(a * (1.0 - s) + b * (s * (1.0 - v)) + c * (s * v));
    }
    Ok(PointCloud { points })
}

/// Euclidean distance from `p` to a closed triangle.
pub fn point_triangle_distance(p: Vec3, tri: [Vec3; 3]) -> f64 {
    let [a, b, c] = tri;
    let n = (b - a).cross(c - a);
    let nn = n.dot(n);
    if nn > 0.0 {
        let d = (p - a).dot(n) / nn;
        let q = p - n * d;
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|&(u, v)| (v - u).cross(q - u).dot(n) >= 0.0);
        if inside {
            return (p - q).length();
        }
    }
    [(a, b), (b, c), (c, a)]
        .iter()
        .map(|&(u, v)| {
            let e = v - u;
            let ee = e.dot(e);
            let t = if ee > 0.0 { ((p - u).dot(e) / ee).clamp(0.0, 1.0) } else { 0.0 };
            (p - (u + e * t)).length()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles(area_a: f64, area_b: f64) -> Mesh {
        let mut m = Mesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0 * area_a, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(10.0, 0.0, 0.0),
                Vec3::new(10.0 + 2.0 * area_b, 0.0, 0.0),
                Vec3::new(10.0, 1.0, 0.0),
            ],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
            ..Mesh::default()
        };
        m.recompute_normals();
        m
    }

    #[test]
    fn zero_samples() {
        let c = sample_mesh_surface(&two_triangles(1.0, 1.0), 0, 1).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn empty_mesh_rejected() {
        assert_eq!(sample_mesh_surface(&Mesh::default(), 3, 1), Err(GeometryError::EmptyMesh));
    }

    #[test]
    fn flat_square_stays_in_plane() {
        let mut m = Mesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            ..Mesh::default()
        };
        m.recompute_normals();
        let c = sample_mesh_surface(&m, 1000, 3).unwrap();
        assert_eq!(c.len(), 1000);
        for p in &c.points {
            assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y) && p.z == 0.0);
        }
    }

    #[test]
    fn counts_follow_area() {
        let m = two_triangles(1.0, 3.0);
        let c = sample_mesh_surface(&m, 10_000, 11).unwrap();
        let first = c.points.iter().filter(|p| p.x < 5.0).count() as f64;
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        assert!((first - 2500.0).abs() <= 4.0 * sd, "{first}");
    }

    #[test]
    fn deterministic_per_seed() {
        let m = two_triangles(1.0, 2.0);
        assert_eq!(sample_mesh_surface(&m, 50, 9), sample_mesh_surface(&m, 50, 9));
        assert_ne!(sample_mesh_surface(&m, 50, 9), sample_mesh_surface(&m, 50, 10));
    }

    #[test]
    fn triangle_distance() {
        let tri = [Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        assert!((point_triangle_distance(Vec3::new(0.2, 0.2, 3.0), tri) - 3.0).abs() < 1e-12);
        assert!((point_triangle_distance(Vec3::new(-1.0, 0.0, 0.0), tri) - 1.0).abs() < 1e-12);
    }
}
