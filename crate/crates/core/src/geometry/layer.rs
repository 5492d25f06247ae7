use super::{triangulate_polygon, Mesh, MIN_TRIANGLE_AREA};
use crate::contour::{label_components, rings_to_map, trace_rings};
use crate::grid::{Grid, MapFrame, Mask};
use crate::math::{ring_signed_area, Vec3};

/// Planar z = 0 mesh covering a mask region exactly. Each 8-connected
/// component is traced along pixel edges (collinear runs merged, no
/// further simplification) and ear-clipped with its holes.
pub fn triangulate_layer_mask(mask: &Mask, meters_per_pixel: f64) -> Mesh {
    let mut mesh = Mesh::default();
    if mask.none() {
        return mesh;
    }
    let frame = MapFrame::for_grid(mask, meters_per_pixel);
    let (labels, n) = label_components(mask);
    let mut bbox = vec![(usize::MAX, usize::MAX, 0usize, 0usize); n as usize];
    for y in 0..labels.height() {
        for x in 0..labels.width() {
            let l = *labels.get(x, y);
            if l > 0 {
                let b = &mut bbox[l as usize - 1];
                *b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
            }
        }
    }
    for (k, &(x0, y0, x1, y1)) in bbox.iter().enumerate() {
        let label = k as u32 + 1;
        let sub = Grid::from_fn(x1 - x0 + 1, y1 - y0 + 1, |x, y| *labels.get(x + x0, y + y0) == label);
        let mut rings = trace_rings(&sub);
        for r in &mut rings {
            for c in r.iter_mut() {
                c.0 += x0 as i32;
                c.1 += y0 as i32;
            }
        }
        let mut outer = Vec::new();
        let mut holes = Vec::new();
        for r in rings_to_map(&rings, &frame) {
            if ring_signed_area(&r) > 0.0 {
                outer = r;
            } else {
                holes.push(r);
            }
        }
        let base = mesh.vertices.len() as u32;
        let pts: Vec<_> = outer.iter().chain(holes.iter().flatten()).copied().collect();
        for t in triangulate_polygon(&outer, &holes) {
            let [a, b, c] = t.map(|i| pts[i as usize]);
            if (b - a).cross(c - a).abs() * 0.5 > MIN_TRIANGLE_AREA {
                mesh.triangles.push(t.map(|i| i + base));
            }
        }
        mesh.vertices.extend(pts.iter().map(|p| p.extend(0.0)));
    }
    mesh.normals = vec![Vec3::new(0.0, 0.0, 1.0); mesh.vertices.len()];
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rectangle() {
        let mask = Grid::new(7, 5, true);
        let m = triangulate_layer_mask(&mask, 2.0);
        assert_eq!(m.triangles.len(), 2);
        assert!((m.surface_area() - 35.0 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn annulus() {
        let mask = Grid::from_fn(20, 20, |x, y| {
            let (dx, dy) = (x as f64 - 9.5, y as f64 - 9.5);
            let r = (dx * dx + dy * dy).sqrt();
            (4.0..9.0).contains(&r)
        });
        let m = triangulate_layer_mask(&mask, 1.0);
        assert!((m.surface_area() - mask.count() as f64).abs() < 1e-9);
        assert!(m.validate().is_ok());
    }

    #[test]
    fn empty_mask() {
        assert!(triangulate_layer_mask(&Grid::new(4, 4, false), 1.0).is_empty());
    }
}
