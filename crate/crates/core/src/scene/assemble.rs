use std::collections::BTreeMap;

use super::persist::hex_digest;
use super::{
    AssetCategory, AssetEntry, AssetInstance, Layer, LayerKind, MaterialDef, SceneDocument, SceneError, SceneMetadata,
    SkyboxDef,
};
use crate::geometry::{fit_placement, triangulate_layer_mask, SimilarityPlacement};
use crate::layout::{encode_height_image, encode_layout_image, BuildingInstance, HeightMap, LayoutMap};
use crate::math::Vec2;
use crate::placement::{PlacementPoint, PointKind};

pub struct AssembleInputs<'a> {
    pub name: String,
    pub seed: u64,
    pub layout: &'a LayoutMap,
    pub hmap: &'a HeightMap,
    pub instances: &'a [BuildingInstance],
    /// Building instance id → asset.
    pub assets: &'a BTreeMap<String, AssetEntry>,
    pub placements: &'a [PlacementPoint],
    /// Library assets used for vegetation and roadside points.
    pub tree_asset: Option<&'a AssetEntry>,
    pub streetlight_asset: Option<&'a AssetEntry>,
    pub layer_materials: &'a BTreeMap<LayerKind, MaterialDef>,
    /// Extra materials made available to instances and later edits.
    pub extra_materials: &'a [MaterialDef],
    pub skybox: SkyboxDef,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Yaw in `[0, 2π)` derived from a seeded hash of a position.
pub fn prop_yaw(seed: u64, p: Vec2) -> f64 {
    let h = splitmix64(seed ^ splitmix64(p.x.to_bits() ^ splitmix64(p.y.to_bits())));
    (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU
}

/// Builds the scene: four planar layers from the layout masks, one
/// fitted instance per building, one unit-scale instance per placement
/// point, and the skybox.
pub fn assemble_scene(inputs: &AssembleInputs<'_>) -> Result<SceneDocument, SceneError> {
    let layout = inputs.layout;
    let mpp = layout.meters_per_pixel;
    let mut materials: BTreeMap<String, MaterialDef> = BTreeMap::new();
    let mut layers = Vec::with_capacity(4);
    for kind in LayerKind::ALL {
        let mat = inputs
            .layer_materials
            .get(&kind)
            .ok_or(SceneError::MaterialMissing(kind))?;
        materials.insert(mat.id.clone(), mat.clone());
        layers.push(Layer {
            kind,
            mesh: triangulate_layer_mask(&layout.mask(kind.semantic_class()), mpp),
            material: mat.id.clone(),
        });
    }
    for m in inputs.extra_materials {
        materials.entry(m.id.clone()).or_insert_with(|| m.clone());
    }

    let mut assets: BTreeMap<String, AssetEntry> = BTreeMap::new();
    let mut instances = Vec::new();
    for b in inputs.instances {
        let asset = inputs
            .assets
            .get(&b.id)
            .ok_or_else(|| SceneError::MissingAsset(b.id.clone()))?;
        let placement = fit_placement(&asset.bounds, b).map_err(|e| SceneError::Placement(b.id.clone(), e))?;
        assets.entry(asset.id.clone()).or_insert_with(|| asset.clone());
        instances.push(AssetInstance {
            id: b.id.clone(),
            asset_ref: asset.id.clone(),
            category: AssetCategory::Building,
            placement,
            attribute_overrides: BTreeMap::new(),
        });
    }

    let mut counters = [0usize; 2];
    for p in inputs.placements {
        let (asset, category, slot) = match p.kind {
            PointKind::Tree => (inputs.tree_asset, AssetCategory::Tree, 0),
            PointKind::Streetlight => (inputs.streetlight_asset, AssetCategory::Streetlight, 1),
        };
        let asset = asset.ok_or_else(|| SceneError::MissingAsset(category.name().to_string()))?;
        assets.entry(asset.id.clone()).or_insert_with(|| asset.clone());
        let mut placement = SimilarityPlacement::at(p.position, prop_yaw(inputs.seed, p.position));
        placement.translation.z = -asset.bounds.min.z;
        instances.push(AssetInstance {
            id: format!("{}_{:04}", category.id_prefix(), counters[slot]),
            asset_ref: asset.id.clone(),
            category,
            placement,
            attribute_overrides: BTreeMap::new(),
        });
        counters[slot] += 1;
    }
    for a in assets.values() {
        if let Some(m) = &a.material {
            if !materials.contains_key(m) {
                log::warn!("asset {} references unknown material {m}", a.id);
            }
        }
    }

    Ok(SceneDocument {
        metadata: SceneMetadata {
            name: inputs.name.clone(),
            seed: inputs.seed,
            meters_per_pixel: mpp,
            width: layout.width(),
            height: layout.height(),
            layout_sha256: hex_digest(&encode_layout_image(layout)),
            height_sha256: hex_digest(&encode_height_image(inputs.hmap)),
        },
        layers,
        instances,
        assets,
        materials,
        skybox: inputs.skybox.clone(),
        revision: 1,
        edit_log: Vec::new(),
        undo_stack: Vec::new(),
        redo_stack: Vec::new(),
    })
}
