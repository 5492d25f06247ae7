use super::{triangulate_polygon, GeometryError, Mesh, MIN_TRIANGLE_AREA};
use crate::layout::FootprintPolygon;
use crate::math::{Vec2, Vec3};

/// Facade texture repeat length in meters.
const FACADE_UV_METERS: f64 = 3.0;

/// Closed prism over a footprint: bottom cap at z = 0, top cap at
/// z = `height`, two triangles per wall segment. Vertices are shared
/// between caps and walls, so the result is a closed 2-manifold for
/// simple footprints.
pub fn extrude_footprint(fp: &FootprintPolygon, height: f64) -> Result<Mesh, GeometryError> {
    if !(height > 0.0) || !height.is_finite() {
        return Err(GeometryError::ZeroHeight);
    }
    if !fp.is_well_formed() {
        return Err(GeometryError::InvalidPolygon(
            "rings need ≥ 3 vertices, outer counter-clockwise, holes clockwise".into(),
        ));
    }
    let rings: Vec<&Vec<Vec2>> = std::iter::once(&fp.outer).chain(fp.holes.iter()).collect();
    let n: usize = rings.iter().map(|r| r.len()).sum();
    let mut mesh = Mesh::default();
    for z in [0.0, height] {
        for r in &rings {
            mesh.vertices.extend(r.iter().map(|p| p.extend(z)));
        }
    }
    let top = n as u32;
    let cap = triangulate_polygon(&fp.outer, &fp.holes);
    for t in &cap {
        let (a, b, c) = (fp_point(&rings, t[0]), fp_point(&rings, t[1]), fp_point(&rings, t[2]));
        if (b - a).cross(c - a).abs() * 0.5 <= MIN_TRIANGLE_AREA {
            continue;
        }
        mesh.triangles.push([t[0] + top, t[1] + top, t[2] + top]);
        mesh.triangles.push([t[0], t[2], t[1]]);
    }
    let mut base = 0u32;
    for r in &rings {
        let m = r.len() as u32;
        for i in 0..m {
            let j = (i + 1) % m;
            let (b0, b1) = (base + i, base + j);
            let (t0, t1) = (b0 + top, b1 + top);
            mesh.triangles.push([b0, b1, t1]);
            mesh.triangles.push([b0, t1, t0]);
        }
        base += m;
    }
    mesh.recompute_normals();
    Ok(mesh)
}

fn fp_point(rings: &[&Vec<Vec2>], mut idx: u32) -> Vec2 {
    for r in rings {
        if (idx as usize) < r.len() {
            return r[idx as usize];
        }
        idx -= r.len() as u32;
    }
    unreachable!("triangle index outside footprint rings")
}

/// Unwelds a mesh into flat-shaded triangles and assigns planar UVs: caps
/// are projected on the ground plane, walls along their horizontal
/// tangent and height, with one texture repeat per three meters.
pub fn with_facade_uvs(mesh: &Mesh) -> Mesh {
    let mut out = Mesh {
        uvs: Some(Vec::with_capacity(mesh.triangles.len() * 3)),
        ..Mesh::default()
    };
    let uvs = out.uvs.as_mut().unwrap();
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangle(t);
        let n = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
        let base = out.vertices.len() as u32;
        for p in tri {
            let uv = if n.z.abs() > 0.5 {
                p.xy() / FACADE_UV_METERS
            } else {
                let tangent = Vec2::new(-n.y, n.x).normalized();
                Vec2::new(p.xy().dot(tangent), p.z) / FACADE_UV_METERS
            };
            out.vertices.push(p);
            out.normals.push(if n.length() > 0.0 { n } else { Vec3::new(0.0, 0.0, 1.0) });
            uvs.push(uv);
        }
        out.triangles.push([base, base + 1, base + 2]);
    }
    out
}
