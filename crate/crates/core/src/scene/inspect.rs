//! Standalone GLB reader used to check exported files: container
//! structure, accessor bounds, index ranges and per-node world bounds
//! computed from the raw vertex data and node transforms.

use serde_json::Value;

use super::SceneError;
use crate::geometry::Mesh;
use crate::math::{Aabb, Vec2, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSummary {
    pub name: String,
    pub vertex_count: usize,
    pub triangle_count: usize,
    /// World bounds in the map frame (z up); `None` for nodes without a mesh.
    pub world_aabb: Option<Aabb>,
    pub extras: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlbSummary {
    pub node_count: usize,
    pub nodes: Vec<NodeSummary>,
    pub mesh_count: usize,
    pub material_count: usize,
    pub json: Value,
}

fn bad(msg: impl Into<String>) -> SceneError {
    SceneError::InvalidGltf(msg.into())
}

fn u32_at(b: &[u8], o: usize) -> Result<u32, SceneError> {
    b.get(o..o + 4)
        .map(|s| u32::from_le_bytes(s.try_into().unwrap()))
        .ok_or_else(|| bad("truncated header"))
}

fn split_chunks(bytes: &[u8]) -> Result<(Value, &[u8]), SceneError> {
    if bytes.get(0..4) != Some(b"glTF") {
        return Err(bad("bad magic"));
    }
    if u32_at(bytes, 4)? != 2 {
        return Err(bad("container version is not 2"));
    }
    if u32_at(bytes, 8)? as usize != bytes.len() {
        return Err(bad("declared length differs from file length"));
    }
    let json_len = u32_at(bytes, 12)? as usize;
    if bytes.get(16..20) != Some(b"JSON") {
        return Err(bad("first chunk is not JSON"));
    }
    if json_len % 4 != 0 {
        return Err(bad("JSON chunk not 4-byte aligned"));
    }
    let json_bytes = bytes.get(20..20 + json_len).ok_or_else(|| bad("truncated JSON chunk"))?;
    let json: Value = serde_json::from_slice(json_bytes).map_err(|e| bad(format!("JSON chunk: {e}")))?;
    let mut bin: &[u8] = &[];
    let rest = 20 + json_len;
    if rest < bytes.len() {
        let bin_len = u32_at(bytes, rest)? as usize;
        if bytes.get(rest + 4..rest + 8) != Some(b"BIN\0") {
            return Err(bad("second chunk is not BIN"));
        }
        bin = bytes
            .get(rest + 8..rest + 8 + bin_len)
            .ok_or_else(|| bad("truncated BIN chunk"))?;
        if rest + 8 + bin_len != bytes.len() {
            return Err(bad("trailing bytes after BIN chunk"));
        }
    }
    Ok((json, bin))
}

fn arr<'a>(json: &'a Value, key: &str) -> &'a [Value] {
    json.get(key).and_then(Value::as_array).map_or(&[], Vec::as_slice)
}

fn index(v: &Value, key: &str) -> Option<usize> {
    v.get(key).and_then(Value::as_u64).map(|i| i as usize)
}

struct Accessor {
    count: usize,
    width: usize,
    component: u64,
    data: Vec<u8>,
}

impl Accessor {
    fn f32s(&self) -> Vec<f32> {
        self.data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }

    fn u32s(&self) -> Vec<u32> {
        match self.component {
            5125 => self
                .data
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            5123 => self
                .data
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes(c.try_into().unwrap()) as u32)
                .collect(),
            _ => self.data.iter().map(|&b| b as u32).collect(),
        }
    }
}

fn read_accessor(json: &Value, bin: &[u8], i: usize) -> Result<Accessor, SceneError> {
    let acc = arr(json, "accessors").get(i).ok_or_else(|| bad(format!("accessor {i} missing")))?;
    let count = index(acc, "count").ok_or_else(|| bad(format!("accessor {i} has no count")))?;
    let component = acc.get("componentType").and_then(Value::as_u64).unwrap_or(0);
    let csize = match component {
        5120 | 5121 => 1,
        5122 | 5123 => 2,
        5125 | 5126 => 4,
        c => return Err(bad(format!("accessor {i} has component type {c}"))),
    };
    let width = match acc.get("type").and_then(Value::as_str) {
        Some("SCALAR") => 1,
        Some("VEC2") => 2,
        Some("VEC3") => 3,
        Some("VEC4") => 4,
        t => return Err(bad(format!("accessor {i} has type {t:?}"))),
    };
    let view_i = index(acc, "bufferView").ok_or_else(|| bad(format!("accessor {i} has no bufferView")))?;
    let view = arr(json, "bufferViews")
        .get(view_i)
        .ok_or_else(|| bad(format!("bufferView {view_i} missing")))?;
    if index(view, "buffer") != Some(0) {
        return Err(bad(format!("bufferView {view_i} does not use buffer 0")));
    }
    let v_off = index(view, "byteOffset").unwrap_or(0);
    let v_len = index(view, "byteLength").ok_or_else(|| bad(format!("bufferView {view_i} has no length")))?;
    if v_off + v_len > bin.len() {
        return Err(bad(format!("bufferView {view_i} exceeds BIN chunk")));
    }
    if view.get("byteStride").is_some() {
        return Err(bad("interleaved buffer views are not supported"));
    }
    let a_off = index(acc, "byteOffset").unwrap_or(0);
    let bytes = count * width * csize;
    if a_off + bytes > v_len {
        return Err(bad(format!("accessor {i} exceeds its bufferView")));
    }
    let start = v_off + a_off;
    Ok(Accessor {
        count,
        width,
        component,
        data: bin[start..start + bytes].to_vec(),
    })
}

fn quat_rotate(q: [f64; 4], v: Vec3) -> Vec3 {
    let u = Vec3::new(q[0], q[1], q[2]);
    let w = q[3];
    u * (2.0 * u.dot(v)) + v * (w * w - u.dot(u)) + u.cross(v) * (2.0 * w)
}

fn vec_n<const N: usize>(v: Option<&Value>, default: [f64; N]) -> Result<[f64; N], SceneError> {
    let Some(v) = v else { return Ok(default) };
    let items = v.as_array().filter(|a| a.len() == N).ok_or_else(|| bad("malformed node transform"))?;
    let mut out = default;
    for (o, x) in out.iter_mut().zip(items) {
        *o = x.as_f64().ok_or_else(|| bad("malformed node transform"))?;
    }
    Ok(out)
}

fn summarise(json: &Value, bin: &[u8]) -> Result<GlbSummary, SceneError> {
    if json.pointer("/asset/version").and_then(Value::as_str) != Some("2.0") {
        return Err(bad("asset.version must be \"2.0\""));
    }
    if let Some(len) = arr(json, "buffers").first().and_then(|b| index(b, "byteLength")) {
        if len > bin.len() {
            return Err(bad("buffer 0 is longer than the BIN chunk"));
        }
    }
    let textures = arr(json, "textures");
    for (i, t) in textures.iter().enumerate() {
        if index(t, "source").is_some_and(|s| s >= arr(json, "images").len()) {
            return Err(bad(format!("texture {i} references a missing image")));
        }
        if index(t, "sampler").is_some_and(|s| s >= arr(json, "samplers").len()) {
            return Err(bad(format!("texture {i} references a missing sampler")));
        }
    }
    let materials = arr(json, "materials");
    for (i, m) in materials.iter().enumerate() {
        for ptr in [
            "/pbrMetallicRoughness/baseColorTexture/index",
            "/pbrMetallicRoughness/metallicRoughnessTexture/index",
            "/normalTexture/index",
            "/occlusionTexture/index",
        ] {
            if m.pointer(ptr).and_then(Value::as_u64).is_some_and(|t| t as usize >= textures.len()) {
                return Err(bad(format!("material {i} references a missing texture")));
            }
        }
    }

    // Mesh-local positions and counts.
    let meshes = arr(json, "meshes");
    let mut mesh_data: Vec<(Vec<Vec3>, usize, usize)> = Vec::with_capacity(meshes.len());
    for (mi, mesh) in meshes.iter().enumerate() {
        let mut points = Vec::new();
        let (mut verts, mut tris) = (0, 0);
        for prim in arr(mesh, "primitives") {
            if prim.get("mode").and_then(Value::as_u64).unwrap_or(4) != 4 {
                return Err(bad(format!("mesh {mi} has a non-triangle primitive")));
            }
            if index(prim, "material").is_some_and(|m| m >= materials.len()) {
                return Err(bad(format!("mesh {mi} references a missing material")));
            }
            let pos_i = prim
                .pointer("/attributes/POSITION")
                .and_then(Value::as_u64)
                .ok_or_else(|| bad(format!("mesh {mi} has no POSITION")))? as usize;
            let pos = read_accessor(json, bin, pos_i)?;
            if pos.width != 3 || pos.component != 5126 {
                return Err(bad(format!("mesh {mi} POSITION is not float VEC3")));
            }
            let flat = pos.f32s();
            let acc = &arr(json, "accessors")[pos_i];
            let (Some(lo), Some(hi)) = (acc.get("min"), acc.get("max")) else {
                return Err(bad(format!("accessor {pos_i} lacks min/max")));
            };
            let (lo, hi) = (vec_n::<3>(Some(lo), [0.0; 3])?, vec_n::<3>(Some(hi), [0.0; 3])?);
            for c in flat.chunks_exact(3) {
                for k in 0..3 {
                    let v = c[k] as f64;
                    if !v.is_finite() || v < lo[k] || v > hi[k] {
                        return Err(bad(format!("accessor {pos_i} data outside min/max")));
                    }
                }
                points.push(Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64));
            }
            for (name, attr) in prim.get("attributes").and_then(Value::as_object).into_iter().flatten() {
                let a = attr.as_u64().ok_or_else(|| bad(format!("attribute {name} is not an index")))? as usize;
                if read_accessor(json, bin, a)?.count != pos.count {
                    return Err(bad(format!("mesh {mi} attribute {name} count differs from POSITION")));
                }
            }
            let idx_i = index(prim, "indices").ok_or_else(|| bad(format!("mesh {mi} is not indexed")))?;
            let idx = read_accessor(json, bin, idx_i)?;
            if idx.width != 1 || idx.count % 3 != 0 {
                return Err(bad(format!("accessor {idx_i} is not a triangle index list")));
            }
            if idx.u32s().iter().any(|&i| i as usize >= pos.count) {
                return Err(bad(format!("accessor {idx_i} indexes past the vertex count")));
            }
            verts += pos.count;
            tris += idx.count / 3;
        }
        mesh_data.push((points, verts, tris));
    }

    let nodes = arr(json, "nodes");
    for n in nodes {
        if !arr(n, "children").is_empty() {
            return Err(bad("node hierarchies are not supported"));
        }
    }
    let scene_i = index(json, "scene").unwrap_or(0);
    let scene = arr(json, "scenes").get(scene_i).ok_or_else(|| bad("no scene"))?;
    let mut out = Vec::new();
    for root in arr(scene, "nodes") {
        let ni = root.as_u64().ok_or_else(|| bad("scene node is not an index"))? as usize;
        let node = nodes.get(ni).ok_or_else(|| bad(format!("node {ni} missing")))?;
        if node.get("matrix").is_some() {
            return Err(bad("matrix transforms are not supported"));
        }
        let t = vec_n(node.get("translation"), [0.0; 3])?;
        let r = vec_n(node.get("rotation"), [0.0, 0.0, 0.0, 1.0])?;
        let s = vec_n(node.get("scale"), [1.0; 3])?;
        let (mut verts, mut tris, mut world_aabb) = (0, 0, None);
        if let Some(mi) = index(node, "mesh") {
            let (points, v, tc) = mesh_data.get(mi).ok_or_else(|| bad(format!("node {ni} references mesh {mi}")))?;
            verts = *v;
            tris = *tc;
            let world: Vec<Vec3> = points
                .iter()
                .map(|p| {
                    let q = quat_rotate(r, Vec3::new(p.x * s[0], p.y * s[1], p.z * s[2]));
                    let g = q + Vec3::new(t[0], t[1], t[2]);
                    Vec3::new(g.x, -g.z, g.y)
                })
                .collect();
            world_aabb = Aabb::from_points(world);
        }
        out.push(NodeSummary {
            name: node.get("name").and_then(Value::as_str).unwrap_or_default().to_string(),
            vertex_count: verts,
            triangle_count: tris,
            world_aabb,
            extras: node.get("extras").cloned().unwrap_or(Value::Null),
        });
    }
    Ok(GlbSummary {
        node_count: out.len(),
        nodes: out,
        mesh_count: meshes.len(),
        material_count: materials.len(),
        json: json.clone(),
    })
}

/// Parses and checks a GLB file, returning per-node counts and bounds.
pub fn inspect_glb(bytes: &[u8]) -> Result<GlbSummary, SceneError> {
    let (json, bin) = split_chunks(bytes)?;
    summarise(&json, bin)
}

pub fn validate_glb(bytes: &[u8]) -> Result<(), SceneError> {
    inspect_glb(bytes).map(|_| ())
}

/// Flattens every mesh node of the default scene into one map-frame
/// (z-up) mesh, applying node transforms. Normals are recomputed.
pub fn glb_to_mesh(bytes: &[u8]) -> Result<Mesh, SceneError> {
    let (json, bin) = split_chunks(bytes)?;
    summarise(&json, bin)?;
    let nodes = arr(&json, "nodes");
    let scene = &arr(&json, "scenes")[index(&json, "scene").unwrap_or(0)];
    let mut out = Mesh::default();
    let mut all_uvs = true;
    let mut uvs = Vec::new();
    for root in arr(scene, "nodes") {
        let node = &nodes[root.as_u64().unwrap_or(0) as usize];
        let Some(mi) = index(node, "mesh") else { continue };
        let t = vec_n(node.get("translation"), [0.0; 3])?;
        let r = vec_n(node.get("rotation"), [0.0, 0.0, 0.0, 1.0])?;
        let s = vec_n(node.get("scale"), [1.0; 3])?;
        for prim in arr(&arr(&json, "meshes")[mi], "primitives") {
            let pos_i = prim.pointer("/attributes/POSITION").and_then(Value::as_u64).unwrap_or(0) as usize;
            let pos = read_accessor(&json, bin, pos_i)?.f32s();
            let idx = read_accessor(&json, bin, index(prim, "indices").unwrap_or(0))?.u32s();
            let base = out.vertices.len() as u32;
            for c in pos.chunks_exact(3) {
                let q = quat_rotate(r, Vec3::new(c[0] as f64 * s[0], c[1] as f64 * s[1], c[2] as f64 * s[2]))
                    + Vec3::new(t[0], t[1], t[2]);
                out.vertices.push(Vec3::new(q.x, -q.z, q.y));
            }
            match prim.pointer("/attributes/TEXCOORD_0").and_then(Value::as_u64) {
                Some(ti) => {
                    let acc = read_accessor(&json, bin, ti as usize)?;
                    if acc.width != 2 || acc.component != 5126 {
                        all_uvs = false;
                    }
                    uvs.extend(acc.f32s().chunks_exact(2).map(|c| Vec2::new(c[0] as f64, c[1] as f64)));
                }
                None => all_uvs = false,
            }
            let mirrored = s[0] * s[1] * s[2] < 0.0;
            for tri in idx.chunks_exact(3) {
                let [a, b, c] = [tri[0] + base, tri[1] + base, tri[2] + base];
                out.triangles.push(if mirrored { [a, c, b] } else { [a, b, c] });
            }
        }
    }
    if out.vertices.is_empty() {
        return Err(bad("no mesh geometry in scene"));
    }
    if all_uvs && uvs.len() == out.vertices.len() {
        out.uvs = Some(uvs);
    }
    out.recompute_normals();
    Ok(out)
}
