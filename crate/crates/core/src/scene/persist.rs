//! Canonical JSON document format.
//!
//! Keys are sorted (serde_json's default map is ordered) and floats use
//! the shortest round-trip representation, so `save(load(save(d)))` is
//! byte-identical to `save(d)`. Mesh buffers are little-endian binary
//! packed into base64 strings; when saving to a directory, buffers above
//! [`EXTERNAL_MESH_BYTES`] are written beside the document instead.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::{SceneDocument, SceneError};

pub const FORMAT: &str = "majutsu-scene";
pub const VERSION: &str = "1";
pub const EXTERNAL_MESH_BYTES: usize = 1 << 20;
const MESH_ENCODING: &str = "le-f64/u32";

pub(crate) mod mesh_codec {
    use base64::Engine;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{B64, MESH_ENCODING};
    use crate::geometry::Mesh;
    use crate::math::{Vec2, Vec3};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Packed {
        encoding: String,
        vertex_count: usize,
        triangle_count: usize,
        has_uvs: bool,
        data: String,
    }

    pub fn pack(mesh: &Mesh) -> Vec<u8> {
        let mut out = Vec::with_capacity(mesh.vertices.len() * 64 + mesh.triangles.len() * 12);
        for v in mesh.vertices.iter().chain(&mesh.normals) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        if let Some(uvs) = &mesh.uvs {
            for uv in uvs {
                out.extend_from_slice(&uv.x.to_le_bytes());
                out.extend_from_slice(&uv.y.to_le_bytes());
            }
        }
        for t in &mesh.triangles {
            for i in t {
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
        out
    }

    pub fn unpack(bytes: &[u8], vertex_count: usize, triangle_count: usize, has_uvs: bool) -> Result<Mesh, String> {
        let expected = vertex_count * 48 + if has_uvs { vertex_count * 16 } else { 0 } + triangle_count * 12;
        if bytes.len() != expected {
            return Err(format!("mesh buffer holds {} bytes, expected {expected}", bytes.len()));
        }
        let mut pos = 0usize;
        let mut f = || {
            let v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
            pos += 8;
            v
        };
        let vec3s = |n: usize, f: &mut dyn FnMut() -> f64| (0..n).map(|_| Vec3::new(f(), f(), f())).collect::<Vec<_>>();
        let vertices = vec3s(vertex_count, &mut f);
        let normals = vec3s(vertex_count, &mut f);
        let uvs = has_uvs.then(|| (0..vertex_count).map(|_| Vec2::new(f(), f())).collect::<Vec<_>>());
        let start = vertex_count * 48 + if has_uvs { vertex_count * 16 } else { 0 };
        let idx = &bytes[start..];
        let mut triangles = Vec::with_capacity(triangle_count);
        for t in 0..triangle_count {
            let mut tri = [0u32; 3];
            for (k, slot) in tri.iter_mut().enumerate() {
                let o = (t * 3 + k) * 4;
                *slot = u32::from_le_bytes(idx[o..o + 4].try_into().unwrap());
                if *slot as usize >= vertex_count {
                    return Err(format!("triangle {t} references vertex {slot}"));
                }
            }
            triangles.push(tri);
        }
        Ok(Mesh {
            vertices,
            triangles,
            normals,
            uvs,
        })
    }

    pub fn serialize<S: Serializer>(mesh: &Mesh, s: S) -> Result<S::Ok, S::Error> {
        Packed {
            encoding: MESH_ENCODING.into(),
            vertex_count: mesh.vertices.len(),
            triangle_count: mesh.triangles.len(),
            has_uvs: mesh.uvs.is_some(),
            data: B64.encode(pack(mesh)),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mesh, D::Error> {
        let p = Packed::deserialize(d)?;
        if p.encoding != MESH_ENCODING {
            return Err(D::Error::custom(format!("unknown mesh encoding {:?}", p.encoding)));
        }
        let bytes = B64.decode(p.data.as_bytes()).map_err(D::Error::custom)?;
        unpack(&bytes, p.vertex_count, p.triangle_count, p.has_uvs).map_err(D::Error::custom)
    }
}

fn to_value(doc: &SceneDocument) -> Result<Value, SceneError> {
    let mut v = serde_json::to_value(doc).map_err(|e| SceneError::SerializationFailure(e.to_string()))?;
    let obj = v.as_object_mut().expect("document serialises to an object");
    obj.insert("format".into(), Value::String(FORMAT.into()));
    obj.insert("version".into(), Value::String(VERSION.into()));
    Ok(v)
}

pub fn save_document(doc: &SceneDocument) -> Result<Vec<u8>, SceneError> {
    let v = to_value(doc)?;
    serde_json::to_vec(&v).map_err(|e| SceneError::SerializationFailure(e.to_string()))
}

fn is_packed_mesh(obj: &Map<String, Value>) -> bool {
    obj.get("encoding").and_then(Value::as_str) == Some(MESH_ENCODING)
}

fn visit_meshes(v: &mut Value, f: &mut dyn FnMut(&mut Map<String, Value>) -> Result<(), SceneError>) -> Result<(), SceneError> {
    match v {
        Value::Object(obj) => {
            if is_packed_mesh(obj) {
                return f(obj);
            }
            for child in obj.values_mut() {
                visit_meshes(child, f)?;
            }
        }
        Value::Array(items) => {
            for child in items {
                visit_meshes(child, f)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Writes `file_name` into `dir`, moving mesh buffers larger than
/// [`EXTERNAL_MESH_BYTES`] to `dir/meshes/<sha256>.bin`.
pub fn save_document_to_dir(doc: &SceneDocument, dir: &Path, file_name: &str) -> Result<(), SceneError> {
    let io = |e: std::io::Error| SceneError::SerializationFailure(e.to_string());
    let mut v = to_value(doc)?;
    std::fs::create_dir_all(dir).map_err(io)?;
    visit_meshes(&mut v, &mut |obj| {
        let data = obj.get("data").and_then(Value::as_str).unwrap_or_default();
        if data.len() / 4 * 3 <= EXTERNAL_MESH_BYTES {
            return Ok(());
        }
        let bytes = B64
            .decode(data.as_bytes())
            .map_err(|e| SceneError::SerializationFailure(e.to_string()))?;
        let hash = hex_digest(&bytes);
        let rel = format!("meshes/{hash}.bin");
        std::fs::create_dir_all(dir.join("meshes")).map_err(io)?;
        std::fs::write(dir.join(&rel), &bytes).map_err(io)?;
        obj.remove("data");
        obj.insert("uri".into(), Value::String(rel));
        Ok(())
    })?;
    let bytes = serde_json::to_vec(&v).map_err(|e| SceneError::SerializationFailure(e.to_string()))?;
    std::fs::write(dir.join(file_name), bytes).map_err(io)
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn schema_error(e: serde_path_to_error::Error<serde_json::Error>) -> SceneError {
    let mut path = e.path().to_string();
    let message = e.inner().to_string();
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            if path == "." {
                path = field.to_string();
            } else {
                path = format!("{path}.{field}");
            }
        }
    }
    SceneError::SchemaViolation { path, message }
}

fn from_value(mut v: Value) -> Result<SceneDocument, SceneError> {
    let obj = v.as_object_mut().ok_or_else(|| SceneError::SchemaViolation {
        path: ".".into(),
        message: "document must be a JSON object".into(),
    })?;
    match obj.remove("format") {
        Some(Value::String(f)) if f == FORMAT => {}
        other => {
            return Err(SceneError::SchemaViolation {
                path: "format".into(),
                message: format!("expected {FORMAT:?}, found {other:?}"),
            })
        }
    }
    match obj.remove("version") {
        Some(Value::String(ver)) if ver == VERSION => {}
        Some(Value::String(ver)) => return Err(SceneError::UnknownVersion(ver)),
        Some(other) => return Err(SceneError::UnknownVersion(other.to_string())),
        None => {
            return Err(SceneError::SchemaViolation {
                path: "version".into(),
                message: "missing field `version`".into(),
            })
        }
    }
    serde_path_to_error::deserialize(v).map_err(schema_error)
}

pub fn load_document(bytes: &[u8]) -> Result<SceneDocument, SceneError> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| SceneError::SchemaViolation {
        path: ".".into(),
        message: e.to_string(),
    })?;
    from_value(v)
}

/// Loads a document file, resolving externally stored mesh buffers
/// relative to its directory.
pub fn load_document_from_path(path: &Path) -> Result<SceneDocument, SceneError> {
    let bytes = std::fs::read(path).map_err(|e| SceneError::SerializationFailure(e.to_string()))?;
    let mut v: Value = serde_json::from_slice(&bytes).map_err(|e| SceneError::SchemaViolation {
        path: ".".into(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    visit_meshes(&mut v, &mut |obj| {
        if let Some(Value::String(uri)) = obj.remove("uri") {
            let data = std::fs::read(base.join(&uri)).map_err(|e| SceneError::SchemaViolation {
                path: uri.clone(),
                message: e.to_string(),
            })?;
            obj.insert("data".into(), Value::String(B64.encode(data)));
        }
        Ok(())
    })?;
    from_value(v)
}
