use serde::{Deserialize, Serialize};

use crate::math::{Aabb, Vec2, Vec3};

/// Triangles with area at or below this are rejected as degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

/// Indexed triangle mesh in meters with per-vertex normals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uvs: Option<Vec<Vec2>>,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(c - a).length() * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Signed volume by the divergence theorem; positive for closed meshes
    /// with outward-facing (counter-clockwise) triangles.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Area-weighted vertex normals from triangle winding.
    pub fn recompute_normals(&mut self) {
        let mut acc = vec![Vec3::ZERO; self.vertices.len()];
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(t);
            let n = (b - a).cross(c - a);
            for &i in &self.triangles[t] {
                acc[i as usize] += n;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| {
                let u = n.normalized();
                if u.length() > 0.0 {
                    u
                } else {
                    Vec3::new(0.0, 0.0, 1.0)
                }
            })
            .collect();
    }

    /// Checks index range, degenerate triangles, and unit normals.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.vertices.len() as u32;
        if self.normals.len() != self.vertices.len() {
            return Err(format!(
                "{} normals for {} vertices",
                self.normals.len(),
                self.vertices.len()
            ));
        }
        if let Some(uv) = &self.uvs {
            if uv.len() != self.vertices.len() {
                return Err("uv count differs from vertex count".into());
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(format!("triangle {t} index out of range"));
            }
            if self.triangle_area(t) <= MIN_TRIANGLE_AREA {
                return Err(format!("triangle {t} is degenerate"));
            }
        }
        for (i, nrm) in self.normals.iter().enumerate() {
            if (nrm.length() - 1.0).abs() > 1e-9 {
                return Err(format!("normal {i} is not unit length"));
            }
        }
        Ok(())
    }

    /// Appends another mesh, offsetting its indices.
    pub fn append(&mut self, other: &Mesh) {
        let base = self.vertices.len() as u32;
        let had_uvs = self.uvs.is_some() || self.vertices.is_empty();
        self.vertices.extend_from_slice(&other.vertices);
        self.normals.extend_from_slice(&other.normals);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        match (&mut self.uvs, &other.uvs) {
            (Some(a), Some(b)) if had_uvs => a.extend_from_slice(b),
            (None, Some(b)) if base == 0 => self.uvs = Some(b.clone()),
            _ => self.uvs = None,
        }
    }

    /// Undirected edge → number of incident triangles.
    pub fn edge_multiplicity(&self) -> std::collections::HashMap<(u32, u32), usize> {
        let mut m = std::collections::HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }
}
