#![allow(dead_code)]

use std::collections::BTreeMap;

use majutsu_core::geometry::{extrude_footprint, Mesh};
use majutsu_core::layout::{extract_building_instances, FootprintPolygon, HeightMap, LayoutMap, SemanticClass};
use majutsu_core::math::Vec2;
use majutsu_core::placement::{poisson_disk_sample, sample_roadside_points, SamplingConfig};
use majutsu_core::scene::{
    assemble_scene, AssembleInputs, AssetCategory, AssetEntry, LayerKind, MaterialDef, SceneDocument, SkyboxDef,
};

pub fn material(id: &str) -> MaterialDef {
    MaterialDef {
        id: id.into(),
        base_color: format!("textures/{id}_albedo.png"),
        normal: format!("textures/{id}_normal.png"),
        roughness: format!("textures/{id}_roughness.png"),
        metallic: format!("textures/{id}_metallic.png"),
        ambient_occlusion: format!("textures/{id}_ao.png"),
        uv_tiling: 0.25,
        tags: vec![],
        description: String::new(),
    }
}

pub fn box_mesh(w: f64, l: f64, h: f64) -> Mesh {
    let fp = FootprintPolygon {
        outer: vec![
            Vec2::new(-w / 2.0, -l / 2.0),
            Vec2::new(w / 2.0, -l / 2.0),
            Vec2::new(w / 2.0, l / 2.0),
            Vec2::new(-w / 2.0, l / 2.0),
        ],
        holes: vec![],
    };
    extrude_footprint(&fp, h).unwrap()
}

pub fn asset(id: &str, category: AssetCategory, mesh: Mesh, material: Option<&str>) -> AssetEntry {
    AssetEntry {
        id: id.into(),
        category,
        bounds: mesh.aabb().unwrap(),
        mesh,
        material: material.map(str::to_string),
        style: None,
    }
}

/// 64×64 px at 2 m/px: a horizontal road, a pond, a park and four
/// rectangular buildings of different heights.
pub fn layout_pair() -> (LayoutMap, HeightMap) {
    let mut layout = LayoutMap::filled(64, 64, SemanticClass::Ground);
    let mut hmap = HeightMap::zeros(64, 64);
    let mut fill = |x0: usize, x1: usize, y0: usize, y1: usize, c: SemanticClass, h: f64| {
        for y in y0..y1 {
            for x in x0..x1 {
                layout.set(x, y, c);
                hmap.set(x, y, h);
            }
        }
    };
    fill(0, 64, 30, 35, SemanticClass::Road, 0.0);
    fill(40, 60, 44, 58, SemanticClass::Water, 0.0);
    fill(4, 28, 44, 60, SemanticClass::Vegetation, 0.0);
    fill(4, 14, 4, 12, SemanticClass::Building, 12.0);
    fill(20, 26, 6, 24, SemanticClass::Building, 30.0);
    fill(34, 50, 8, 16, SemanticClass::Building, 21.0);
    fill(52, 60, 18, 26, SemanticClass::Building, 9.0);
    (layout, hmap)
}

pub struct Fixture {
    pub layout: LayoutMap,
    pub hmap: HeightMap,
    pub doc: SceneDocument,
}

pub fn fixture() -> Fixture {
    let (layout, hmap) = layout_pair();
    let instances = extract_building_instances(&layout, &hmap).unwrap();
    let office = asset("office", AssetCategory::Building, box_mesh(10.0, 20.0, 40.0), Some("brick"));
    let assets: BTreeMap<String, AssetEntry> = instances.iter().map(|b| (b.id.clone(), office.clone())).collect();
    let cfg = SamplingConfig {
        radius_r: 6.0,
        ..SamplingConfig::default()
    };
    let mut placements = poisson_disk_sample(&layout.mask(SemanticClass::Vegetation), layout.meters_per_pixel, &cfg);
    placements.extend(sample_roadside_points(&layout, &cfg));
    let tree = asset("tree_oak", AssetCategory::Tree, box_mesh(2.0, 2.0, 6.0), Some("bark"));
    let lamp = asset("lamp_post", AssetCategory::Streetlight, box_mesh(0.3, 0.3, 5.0), None);
    let layer_materials: BTreeMap<LayerKind, MaterialDef> = [
        (LayerKind::Ground, material("grass")),
        (LayerKind::Road, material("asphalt_01")),
        (LayerKind::Water, material("water")),
        (LayerKind::Vegetation, material("moss")),
    ]
    .into_iter()
    .collect();
    let extra = [material("brick"), material("bark"), material("asphalt_02"), material("slate")];
    let doc = assemble_scene(&AssembleInputs {
        name: "fixture".into(),
        seed: 7,
        layout: &layout,
        hmap: &hmap,
        instances: &instances,
        assets: &assets,
        placements: &placements,
        tree_asset: Some(&tree),
        streetlight_asset: Some(&lamp),
        layer_materials: &layer_materials,
        extra_materials: &extra,
        skybox: SkyboxDef {
            id: "clear_noon".into(),
            hdr_ref: "skyboxes/clear_noon.hdr".into(),
            rotation: 0.3,
        },
    })
    .unwrap();
    Fixture { layout, hmap, doc }
}
