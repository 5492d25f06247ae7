//! Binary glTF 2.0 export.
//!
//! The map frame is z-up; glTF is y-up, so points map as
//! `(x, y, z) → (x, z, −y)` and a yaw about +z becomes a rotation about
//! +y by the same angle. PBR maps bind as follows: base colour, normal
//! and occlusion use their core slots; the roughness map is bound as
//! `metallicRoughnessTexture` with `metallicFactor` 0 (a greyscale map
//! then drives roughness through its green channel); the metallic map
//! reference is kept in the material's `extras`.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::{AssetInstance, LayerKind, MaterialDef, SceneDocument, SceneError};
use crate::geometry::Mesh;
use crate::math::{Vec2, Vec3};

const ARRAY_BUFFER: u32 = 34962;
const ELEMENT_ARRAY_BUFFER: u32 = 34963;
const FLOAT: u32 = 5126;
const UNSIGNED_INT: u32 = 5125;
const REPEAT: u32 = 10497;
const LINEAR: u32 = 9729;
const LINEAR_MIPMAP_LINEAR: u32 = 9987;

fn to_y_up(p: Vec3) -> [f32; 3] {
    [p.x as f32, p.z as f32, -p.y as f32]
}

/// UV sphere centred at the origin with inward-facing triangles and
/// normals, equirectangular UVs and a duplicated seam column.
pub fn uv_sphere(radius: f64, segments: usize, rings: usize) -> Mesh {
    let segments = segments.max(3);
    let rings = rings.max(2);
    let mut mesh = Mesh {
        uvs: Some(Vec::new()),
        ..Mesh::default()
    };
    for i in 0..=rings {
        let phi = std::f64::consts::PI * i as f64 / rings as f64;
        for j in 0..=segments {
            let theta = std::f64::consts::TAU * j as f64 / segments as f64;
            let dir = Vec3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos());
            mesh.vertices.push(dir * radius);
            mesh.normals.push(-dir);
            mesh.uvs
                .as_mut()
                .unwrap()
                .push(Vec2::new(j as f64 / segments as f64, i as f64 / rings as f64));
        }
    }
    let row = (segments + 1) as u32;
    let push = |mesh: &mut Mesh, a: u32, b: u32, c: u32| {
        let [pa, pb, pc] = [a, b, c].map(|k| mesh.vertices[k as usize]);
        let n = (pb - pa).cross(pc - pa);
        if n.length() * 0.5 <= crate::geometry::MIN_TRIANGLE_AREA {
            return;
        }
        let centroid = (pa + pb + pc) / 3.0;
        if n.dot(centroid) > 0.0 {
            mesh.triangles.push([a, c, b]);
        } else {
            mesh.triangles.push([a, b, c]);
        }
    };
    for i in 0..rings as u32 {
        for j in 0..segments as u32 {
            let a = i * row + j;
            let b = a + row;
            if i != 0 {
                push(&mut mesh, a, b, a + 1);
            }
            if i + 1 != rings as u32 {
                push(&mut mesh, a + 1, b, b + 1);
            }
        }
    }
    mesh
}

#[derive(Default)]
struct Builder {
    bin: Vec<u8>,
    views: Vec<Value>,
    accessors: Vec<Value>,
    images: Vec<Value>,
    image_index: BTreeMap<String, usize>,
    textures: Vec<Value>,
    materials: Vec<Value>,
    material_index: BTreeMap<(Option<String>, Option<String>), usize>,
    meshes: Vec<Value>,
    nodes: Vec<Value>,
}

struct Primitive {
    position: usize,
    normal: usize,
    texcoord: Option<usize>,
    indices: usize,
}

impl Builder {
    fn view(&mut self, bytes: &[u8], target: u32) -> usize {
        while self.bin.len() % 4 != 0 {
            self.bin.push(0);
        }
        let offset = self.bin.len();
        self.bin.extend_from_slice(bytes);
        self.views.push(json!({
            "buffer": 0,
            "byteOffset": offset,
            "byteLength": bytes.len(),
            "target": target,
        }));
        self.views.len() - 1
    }

    fn float_accessor(&mut self, data: &[f32], width: usize, with_bounds: bool) -> usize {
        let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        let view = self.view(&bytes, ARRAY_BUFFER);
        let kind = match width {
            2 => "VEC2",
            3 => "VEC3",
            _ => unreachable!("unsupported accessor width"),
        };
        let mut acc = json!({
            "bufferView": view,
            "componentType": FLOAT,
            "count": data.len() / width,
            "type": kind,
        });
        if with_bounds {
            let mut lo = vec![f32::INFINITY; width];
            let mut hi = vec![f32::NEG_INFINITY; width];
            for chunk in data.chunks(width) {
                for k in 0..width {
                    lo[k] = lo[k].min(chunk[k]);
                    hi[k] = hi[k].max(chunk[k]);
                }
            }
            acc["min"] = json!(lo);
            acc["max"] = json!(hi);
        }
        self.accessors.push(acc);
        self.accessors.len() - 1
    }

    fn index_accessor(&mut self, tris: &[[u32; 3]]) -> usize {
        let bytes: Vec<u8> = tris.iter().flatten().flat_map(|i| i.to_le_bytes()).collect();
        let view = self.view(&bytes, ELEMENT_ARRAY_BUFFER);
        self.accessors.push(json!({
            "bufferView": view,
            "componentType": UNSIGNED_INT,
            "count": tris.len() * 3,
            "type": "SCALAR",
        }));
        self.accessors.len() - 1
    }

    fn primitive(&mut self, mesh: &Mesh, uvs: Option<Vec<Vec2>>) -> Result<Primitive, SceneError> {
        let finite = mesh
            .vertices
            .iter()
            .chain(&mesh.normals)
            .all(|v| v.x.is_finite() && v.y.is_finite() && v.z.is_finite());
        if !finite {
            return Err(SceneError::SerializationFailure("non-finite mesh data".into()));
        }
        let pos: Vec<f32> = mesh.vertices.iter().flat_map(|&p| to_y_up(p)).collect();
        let nrm: Vec<f32> = mesh
            .normals
            .iter()
            .flat_map(|&n| {
                let n = n.normalized();
                to_y_up(if n.length() > 0.0 { n } else { Vec3::new(0.0, 0.0, 1.0) })
            })
            .collect();
        let position = self.float_accessor(&pos, 3, true);
        let normal = self.float_accessor(&nrm, 3, false);
        let texcoord = uvs.or_else(|| mesh.uvs.clone()).map(|uv| {
            let flat: Vec<f32> = uv.iter().flat_map(|t| [t.x as f32, t.y as f32]).collect();
            self.float_accessor(&flat, 2, false)
        });
        let indices = self.index_accessor(&mesh.triangles);
        Ok(Primitive {
            position,
            normal,
            texcoord,
            indices,
        })
    }

    fn mesh(&mut self, name: &str, prim: &Primitive, material: usize) -> usize {
        let mut attributes = json!({ "POSITION": prim.position, "NORMAL": prim.normal });
        if let Some(t) = prim.texcoord {
            attributes["TEXCOORD_0"] = json!(t);
        }
        self.meshes.push(json!({
            "name": name,
            "primitives": [{
                "attributes": attributes,
                "indices": prim.indices,
                "material": material,
                "mode": 4,
            }],
        }));
        self.meshes.len() - 1
    }

    fn texture(&mut self, uri: &str) -> usize {
        let image = match self.image_index.get(uri) {
            Some(&i) => i,
            None => {
                self.images.push(json!({ "uri": uri }));
                self.image_index.insert(uri.to_string(), self.images.len() - 1);
                self.images.len() - 1
            }
        };
        self.textures.push(json!({ "sampler": 0, "source": image }));
        self.textures.len() - 1
    }

    fn material(&mut self, def: Option<&MaterialDef>, tint: Option<&str>) -> usize {
        let key = (def.map(|d| d.id.clone()), tint.map(str::to_string));
        if let Some(&i) = self.material_index.get(&key) {
            return i;
        }
        let color = tint.and_then(parse_tint).unwrap_or([1.0, 1.0, 1.0]);
        let value = match def {
            Some(d) => {
                let base = self.texture(&d.base_color);
                let normal = self.texture(&d.normal);
                let rough = self.texture(&d.roughness);
                let ao = self.texture(&d.ambient_occlusion);
                json!({
                    "name": d.id,
                    "pbrMetallicRoughness": {
                        "baseColorTexture": { "index": base },
                        "baseColorFactor": [color[0], color[1], color[2], 1.0],
                        "metallicRoughnessTexture": { "index": rough },
                        "metallicFactor": 0.0,
                        "roughnessFactor": 1.0,
                    },
                    "normalTexture": { "index": normal },
                    "occlusionTexture": { "index": ao },
                    "extras": { "metallic_map": d.metallic, "uv_tiling": d.uv_tiling },
                })
            }
            None => json!({
                "name": "default",
                "pbrMetallicRoughness": {
                    "baseColorFactor": [0.8 * color[0], 0.8 * color[1], 0.8 * color[2], 1.0],
                    "metallicFactor": 0.0,
                    "roughnessFactor": 0.9,
                },
            }),
        };
        self.materials.push(value);
        self.material_index.insert(key, self.materials.len() - 1);
        self.materials.len() - 1
    }
}

fn parse_tint(v: &str) -> Option<[f64; 3]> {
    let hex = v.strip_prefix('#')?;
    if hex.len() != 6 {
        return None;
    }
    let c = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok().map(|b| b as f64 / 255.0);
    Some([c(0)?, c(2)?, c(4)?])
}

fn quat_about_y(angle: f64) -> [f64; 4] {
    let (s, c) = (angle * 0.5).sin_cos();
    [0.0, s, 0.0, c]
}

fn instance_node(doc: &SceneDocument, inst: &AssetInstance, mesh: Option<usize>) -> Value {
    let p = doc.effective_placement(inst);
    let t = p.translation;
    let mut node = json!({
        "name": inst.id,
        "translation": [t.x, t.z, -t.y],
        "rotation": quat_about_y(p.yaw),
        "scale": [p.xy_scale, p.z_scale, p.xy_scale],
        "extras": {
            "id": inst.id,
            "asset_ref": inst.asset_ref,
            "category": inst.category.name(),
            "attribute_overrides": inst.attribute_overrides,
        },
    });
    if let Some(m) = mesh {
        node["mesh"] = json!(m);
    }
    node
}

/// Serialises the document as a single-scene GLB: one node per layer
/// (in fixed layer order), one per instance (document order) and one sky
/// sphere node, in that order.
pub fn export_gltf(doc: &SceneDocument) -> Result<Vec<u8>, SceneError> {
    let mut b = Builder::default();

    for kind in LayerKind::ALL {
        let layer = doc
            .layer(kind)
            .ok_or_else(|| SceneError::SerializationFailure(format!("missing {kind} layer")))?;
        let def = doc.materials.get(&layer.material);
        let mut node = json!({ "name": format!("layer_{kind}"), "extras": { "layer": kind.name(), "material": layer.material } });
        if !layer.mesh.is_empty() {
            let tiling = def.map_or(1.0, |d| d.uv_tiling);
            let uvs = layer.mesh.vertices.iter().map(|v| v.xy() * tiling).collect();
            let prim = b.primitive(&layer.mesh, Some(uvs))?;
            let mat = b.material(def, None);
            node["mesh"] = json!(b.mesh(&format!("layer_{kind}"), &prim, mat));
        }
        b.nodes.push(node);
    }

    let mut prims: BTreeMap<String, Primitive> = BTreeMap::new();
    let mut mesh_cache: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for inst in &doc.instances {
        let asset = doc.assets.get(&inst.asset_ref).ok_or_else(|| {
            SceneError::SerializationFailure(format!("instance {} references unknown asset {}", inst.id, inst.asset_ref))
        })?;
        let mesh = if asset.mesh.is_empty() {
            None
        } else {
            if !prims.contains_key(&asset.id) {
                let prim = b.primitive(&asset.mesh, None)?;
                prims.insert(asset.id.clone(), prim);
            }
            let mat_id = inst.attribute_overrides.get("material").or(asset.material.as_ref());
            let def = mat_id.and_then(|m| doc.materials.get(m));
            let mat = b.material(def, inst.attribute_overrides.get("tint").map(String::as_str));
            let key = (asset.id.clone(), mat);
            Some(match mesh_cache.get(&key) {
                Some(&m) => m,
                None => {
                    let m = b.mesh(&asset.id, &prims[&asset.id], mat);
                    mesh_cache.insert(key, m);
                    m
                }
            })
        };
        b.nodes.push(instance_node(doc, inst, mesh));
    }

    let extent = doc.metadata.extent();
    let radius = 2.0 * extent.length().max(1.0);
    let sky = uv_sphere(radius, 48, 24);
    let sky_prim = b.primitive(&sky, None)?;
    let sky_tex = b.texture(&doc.skybox.hdr_ref);
    b.materials.push(json!({
        "name": format!("sky_{}", doc.skybox.id),
        "pbrMetallicRoughness": {
            "baseColorTexture": { "index": sky_tex },
            "metallicFactor": 0.0,
            "roughnessFactor": 1.0,
        },
        "doubleSided": false,
        "extensions": { "KHR_materials_unlit": {} },
    }));
    let sky_mat = b.materials.len() - 1;
    let sky_mesh = b.mesh("sky", &sky_prim, sky_mat);
    let centre = extent * 0.5;
    b.nodes.push(json!({
        "name": "sky",
        "mesh": sky_mesh,
        "translation": [centre.x, 0.0, -centre.y],
        "rotation": quat_about_y(doc.skybox.rotation),
        "extras": { "skybox": doc.skybox.id, "hdr_ref": doc.skybox.hdr_ref },
    }));

    let node_ids: Vec<usize> = (0..b.nodes.len()).collect();
    while b.bin.len() % 4 != 0 {
        b.bin.push(0);
    }
    let gltf = json!({
        "asset": { "version": "2.0", "generator": "majutsu" },
        "extensionsUsed": ["KHR_materials_unlit"],
        "scene": 0,
        "scenes": [{ "name": doc.metadata.name, "nodes": node_ids }],
        "nodes": b.nodes,
        "meshes": b.meshes,
        "materials": b.materials,
        "textures": b.textures,
        "images": b.images,
        "samplers": [{ "magFilter": LINEAR, "minFilter": LINEAR_MIPMAP_LINEAR, "wrapS": REPEAT, "wrapT": REPEAT }],
        "accessors": b.accessors,
        "bufferViews": b.views,
        "buffers": [{ "byteLength": b.bin.len() }],
    });
    let mut json_bytes = serde_json::to_vec(&gltf).map_err(|e| SceneError::SerializationFailure(e.to_string()))?;
    while json_bytes.len() % 4 != 0 {
        json_bytes.push(b' ');
    }
    let total = 12 + 8 + json_bytes.len() + 8 + b.bin.len();
    if total > u32::MAX as usize {
        return Err(SceneError::SerializationFailure("GLB exceeds 4 GiB".into()));
    }
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(b"glTF");
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(b"JSON");
    out.extend_from_slice(&json_bytes);
    out.extend_from_slice(&(b.bin.len() as u32).to_le_bytes());
    out.extend_from_slice(b"BIN\0");
    out.extend_from_slice(&b.bin);
    Ok(out)
}
