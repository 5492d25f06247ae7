//! Wavefront OBJ reading and writing, and mesh loading by file extension.

use std::fmt::Write as _;
use std::path::Path;

use majutsu_core::geometry::Mesh;
use majutsu_core::math::{Vec2, Vec3};

/// Parses `v`, `vt` and `f` records; polygons are fan-triangulated and
/// negative (relative) indices are supported. UVs are kept only when
/// every face corner carries one and each position maps to a single UV.
pub fn read_obj(text: &str) -> Result<Mesh, String> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut texcoords: Vec<Vec2> = Vec::new();
    let mut faces: Vec<Vec<(usize, Option<usize>)>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let err = |m: &str| format!("line {}: {m}", lineno + 1);
        let nums = |it: std::str::SplitWhitespace<'_>| -> Result<Vec<f64>, String> {
            it.map(|s| s.parse::<f64>().map_err(|_| err(&format!("bad number {s:?}")))).collect()
        };
        match it.next() {
            Some("v") => {
                let n = nums(it)?;
                if n.len() < 3 {
                    return Err(err("vertex needs three coordinates"));
                }
                positions.push(Vec3::new(n[0], n[1], n[2]));
            }
            Some("vt") => {
                let n = nums(it)?;
                if n.len() < 2 {
                    return Err(err("texture coordinate needs two values"));
                }
                texcoords.push(Vec2::new(n[0], n[1]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for corner in it {
                    let mut parts = corner.split('/');
                    let resolve = |s: &str, len: usize| -> Result<usize, String> {
                        let i: i64 = s.parse().map_err(|_| err(&format!("bad index {s:?}")))?;
                        let idx = if i < 0 { len as i64 + i } else { i - 1 };
                        if idx < 0 || idx as usize >= len {
                            return Err(err(&format!("index {i} out of range")));
                        }
                        Ok(idx as usize)
                    };
                    let v = resolve(parts.next().unwrap_or(""), positions.len())?;
                    let vt = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, texcoords.len())?),
                        _ => None,
                    };
                    face.push((v, vt));
                }
                if face.len() < 3 {
                    return Err(err("face needs at least three corners"));
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    if positions.is_empty() || faces.is_empty() {
        return Err("no geometry".into());
    }
    let mut uv_of: Vec<Option<usize>> = vec![None; positions.len()];
    let mut uvs_ok = !texcoords.is_empty();
    for face in &faces {
        for &(v, vt) in face {
            match (vt, uv_of[v]) {
                (None, _) => uvs_ok = false,
                (Some(t), None) => uv_of[v] = Some(t),
                (Some(t), Some(u)) if texcoords[t] != texcoords[u] => uvs_ok = false,
                _ => {}
            }
        }
    }
    let mut mesh = Mesh {
        vertices: positions,
        ..Mesh::default()
    };
    for face in &faces {
        for k in 1..face.len() - 1 {
            mesh.triangles.push([face[0].0 as u32, face[k].0 as u32, face[k + 1].0 as u32]);
        }
    }
    if uvs_ok && uv_of.iter().all(Option::is_some) {
        mesh.uvs = Some(uv_of.iter().map(|t| texcoords[t.unwrap()]).collect());
    }
    mesh.recompute_normals();
    Ok(mesh)
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    if let Some(uvs) = &mesh.uvs {
        for t in uvs {
            writeln!(out, "vt {} {}", t.x, t.y).unwrap();
        }
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        if mesh.uvs.is_some() {
            writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}").unwrap();
        } else {
            writeln!(out, "f {a} {b} {c}").unwrap();
        }
    }
    out
}

/// Converts a y-up mesh to the z-up map frame: `(x, y, z) → (x, −z, y)`.
pub fn y_up_to_z_up(mesh: &mut Mesh) {
    for v in mesh.vertices.iter_mut().chain(mesh.normals.iter_mut()) {
        *v = Vec3::new(v.x, -v.z, v.y);
    }
}

/// Loads `.obj` or `.glb`. OBJ data is converted from y-up unless
/// `z_up` is set; GLB data is always y-up per the glTF convention.
pub fn load_mesh(path: &Path, z_up: bool) -> Result<Mesh, String> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match ext.as_str() {
        "obj" => {
            let text = String::from_utf8(bytes).map_err(|_| "OBJ file is not UTF-8".to_string())?;
            let mut mesh = read_obj(&text)?;
            if !z_up {
                y_up_to_z_up(&mut mesh);
            }
            Ok(mesh)
        }
        "glb" => majutsu_core::scene::glb_to_mesh(&bytes).map_err(|e| e.to_string()),
        other => Err(format!("unsupported mesh format {other:?}")),
    }
}
