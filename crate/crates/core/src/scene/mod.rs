//! The editable scene document: four planar layers, placed asset
//! instances, materials, skybox and edit history.

mod assemble;
mod gltf;
mod inspect;
mod persist;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assemble::{assemble_scene, prop_yaw, AssembleInputs};
pub use gltf::{export_gltf, uv_sphere};
pub use inspect::{glb_to_mesh, inspect_glb, validate_glb, GlbSummary, NodeSummary};
pub use persist::{load_document, load_document_from_path, save_document, save_document_to_dir, EXTERNAL_MESH_BYTES};

use crate::edit::{EditRecord, LogEntry};
use crate::geometry::{Mesh, SimilarityPlacement};
use crate::math::{Aabb, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Ground,
    Road,
    Water,
    Vegetation,
}

impl LayerKind {
    pub const ALL: [LayerKind; 4] = [LayerKind::Ground, LayerKind::Road, LayerKind::Water, LayerKind::Vegetation];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Ground => "ground",
            LayerKind::Road => "road",
            LayerKind::Water => "water",
            LayerKind::Vegetation => "vegetation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        LayerKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn semantic_class(self) -> crate::layout::SemanticClass {
        use crate::layout::SemanticClass as C;
        match self {
            LayerKind::Ground => C::Ground,
            LayerKind::Road => C::Road,
            LayerKind::Water => C::Water,
            LayerKind::Vegetation => C::Vegetation,
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetCategory {
    Building,
    Tree,
    Streetlight,
}

impl AssetCategory {
    /// Prefix of generated instance ids.
    pub fn id_prefix(self) -> &'static str {
        match self {
            AssetCategory::Building => "bldg",
            AssetCategory::Tree => "tree",
            AssetCategory::Streetlight => "lamp",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AssetCategory::Building => "building",
            AssetCategory::Tree => "tree",
            AssetCategory::Streetlight => "streetlight",
        }
    }
}

/// PBR texture set; references are relative paths or URIs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialDef {
    pub id: String,
    pub base_color: String,
    pub normal: String,
    pub roughness: String,
    pub metallic: String,
    pub ambient_occlusion: String,
    /// Texture repeats per meter.
    pub uv_tiling: f64,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub description: String,
}

impl MaterialDef {
    pub fn maps(&self) -> [(&'static str, &str); 5] {
        [
            ("base_color", &self.base_color),
            ("normal", &self.normal),
            ("roughness", &self.roughness),
            ("metallic", &self.metallic),
            ("ambient_occlusion", &self.ambient_occlusion),
        ]
    }

    pub fn is_valid(&self) -> bool {
        !self.id.is_empty() && self.maps().iter().all(|(_, m)| !m.is_empty()) && self.uv_tiling > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    #[serde(with = "persist::mesh_codec")]
    pub mesh: Mesh,
    pub material: String,
}

/// Geometry referenced by instances. Library assets are shared between
/// instances; generated assets carry their own entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetEntry {
    pub id: String,
    pub category: AssetCategory,
    #[serde(with = "persist::mesh_codec")]
    pub mesh: Mesh,
    pub bounds: Aabb,
    /// Default material slot.
    #[serde(default)]
    pub material: Option<String>,
    #[serde(default)]
    pub style: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetInstance {
    pub id: String,
    pub asset_ref: String,
    pub category: AssetCategory,
    pub placement: SimilarityPlacement,
    #[serde(default)]
    pub attribute_overrides: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkyboxDef {
    pub id: String,
    pub hdr_ref: String,
    #[serde(default)]
    pub rotation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub name: String,
    pub seed: u64,
    pub meters_per_pixel: f64,
    pub width: usize,
    pub height: usize,
    pub layout_sha256: String,
    pub height_sha256: String,
}

impl SceneMetadata {
    pub fn extent(&self) -> Vec2 {
        Vec2::new(
            self.width as f64 * self.meters_per_pixel,
            self.height as f64 * self.meters_per_pixel,
        )
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let e = self.extent();
        p.x >= 0.0 && p.y >= 0.0 && p.x <= e.x && p.y <= e.y
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub metadata: SceneMetadata,
    pub layers: Vec<Layer>,
    pub instances: Vec<AssetInstance>,
    pub assets: BTreeMap<String, AssetEntry>,
    pub materials: BTreeMap<String, MaterialDef>,
    pub skybox: SkyboxDef,
    pub revision: u64,
    #[serde(default)]
    pub edit_log: Vec<LogEntry>,
    #[serde(default)]
    pub undo_stack: Vec<EditRecord>,
    #[serde(default)]
    pub redo_stack: Vec<EditRecord>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("no asset mapped for instance {0}")]
    MissingAsset(String),
    #[error("no material for layer {0}")]
    MaterialMissing(LayerKind),
    #[error("unsupported document version {0:?}")]
    UnknownVersion(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("serialization failed: {0}")]
    SerializationFailure(String),
    #[error("invalid glTF: {0}")]
    InvalidGltf(String),
    #[error("placement failed for {0}: {1}")]
    Placement(String, crate::geometry::GeometryError),
}

impl SceneDocument {
    pub fn layer(&self, kind: LayerKind) -> Option<&Layer> {
        self.layers.iter().find(|l| l.kind == kind)
    }

    pub fn instance(&self, id: &str) -> Option<&AssetInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn instance_index(&self, id: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.id == id)
    }

    /// Equality of scene content, ignoring revision and history.
    pub fn content_eq(&self, other: &SceneDocument) -> bool {
        self.metadata == other.metadata
            && self.layers == other.layers
            && self.instances == other.instances
            && self.assets == other.assets
            && self.materials == other.materials
            && self.skybox == other.skybox
    }

    /// Placement actually rendered for an instance: a `height` override
    /// replaces the vertical scale while keeping the base elevation.
    pub fn effective_placement(&self, inst: &AssetInstance) -> SimilarityPlacement {
        let mut p = inst.placement;
        let Some(asset) = self.assets.get(&inst.asset_ref) else {
            return p;
        };
        if let Some(h) = inst.attribute_overrides.get("height").and_then(|v| v.parse::<f64>().ok()) {
            let size_z = asset.bounds.size().z;
            if h > 0.0 && size_z > 0.0 {
                let base = p.translation.z + p.z_scale * asset.bounds.min.z;
                p.z_scale = h / size_z;
                p.translation.z = base - p.z_scale * asset.bounds.min.z;
            }
        }
        p
    }

    /// World-space bounds of an instance's asset box.
    pub fn instance_world_aabb(&self, inst: &AssetInstance) -> Option<Aabb> {
        let asset = self.assets.get(&inst.asset_ref)?;
        Some(self.effective_placement(inst).transform_aabb(&asset.bounds))
    }

    pub fn vertex_and_triangle_counts(&self) -> (usize, usize) {
        let mut v = 0;
        let mut t = 0;
        for l in &self.layers {
            v += l.mesh.vertices.len();
            t += l.mesh.triangles.len();
        }
        for i in &self.instances {
            if let Some(a) = self.assets.get(&i.asset_ref) {
                v += a.mesh.vertices.len();
                t += a.mesh.triangles.len();
            }
        }
        (v, t)
    }
}
