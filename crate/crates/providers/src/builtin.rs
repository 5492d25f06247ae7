//! Procedurally built default library: ten styles of twenty building
//! types, street trees, streetlights, PBR materials and skyboxes.

use std::f64::consts::TAU;

use majutsu_core::geometry::{extrude_footprint, with_facade_uvs, Mesh};
use majutsu_core::layout::FootprintPolygon;
use majutsu_core::math::{Vec2, Vec3};
use majutsu_core::scene::{AssetCategory, MaterialDef};

use crate::library::{AssetLibrary, Libraries, LibraryAsset, MaterialLibrary, SkyboxEntry, SkyboxLibrary};
use crate::styles::STYLES;

pub struct SkyboxPreset {
    pub id: &'static str,
    pub description: &'static str,
    pub tags: &'static [&'static str],
}

pub const SKYBOXES: [SkyboxPreset; 6] = [
    SkyboxPreset {
        id: "clear_noon",
        description: "clear midday sky with a high sun",
        tags: &["clear", "sunny", "noon", "day", "bright"],
    },
    SkyboxPreset {
        id: "golden_hour",
        description: "low warm sun shortly before sunset",
        tags: &["sunset", "evening", "golden", "dusk", "warm"],
    },
    SkyboxPreset {
        id: "overcast",
        description: "soft diffuse light under thick cloud",
        tags: &["cloudy", "overcast", "grey", "gray", "rain", "rainy"],
    },
    SkyboxPreset {
        id: "night_city",
        description: "dark sky lit by city glow",
        tags: &["night", "neon", "dark", "midnight"],
    },
    SkyboxPreset {
        id: "dawn_mist",
        description: "cool morning haze",
        tags: &["dawn", "morning", "fog", "foggy", "mist", "misty"],
    },
    SkyboxPreset {
        id: "storm_front",
        description: "dramatic storm clouds",
        tags: &["storm", "stormy", "thunder", "dramatic"],
    },
];

pub const BUILDING_TYPES: [&str; 20] = [
    "box_small",
    "box_large",
    "slab",
    "l_block",
    "courtyard",
    "tower",
    "podium_tower",
    "stepped",
    "twin_wing",
    "u_block",
    "terrace",
    "villa",
    "hall",
    "mid_rise",
    "high_rise",
    "corner_block",
    "atrium",
    "row_house",
    "pavilion",
    "campus",
];

const PITCHED_ROOF_STYLES: [&str; 4] = ["colonial", "scandinavian", "japanese", "mediterranean"];

fn rect(cx: f64, cy: f64, w: f64, l: f64) -> Vec<Vec2> {
    vec![
        Vec2::new(cx - w / 2.0, cy - l / 2.0),
        Vec2::new(cx + w / 2.0, cy - l / 2.0),
        Vec2::new(cx + w / 2.0, cy + l / 2.0),
        Vec2::new(cx - w / 2.0, cy + l / 2.0),
    ]
}

fn prism(outer: Vec<Vec2>, holes: Vec<Vec<Vec2>>, z0: f64, h: f64) -> Mesh {
    let mut m = extrude_footprint(&FootprintPolygon { outer, holes }, h).expect("valid builtin footprint");
    for v in &mut m.vertices {
        v.z += z0;
    }
    m
}

/// Closed gable roof over a `w × l` rectangle, ridge along y.
fn gable(w: f64, l: f64, z0: f64, rise: f64) -> Mesh {
    let (hw, hl) = (w / 2.0, l / 2.0);
    let v = vec![
        Vec3::new(-hw, -hl, z0),
        Vec3::new(hw, -hl, z0),
        Vec3::new(hw, hl, z0),
        Vec3::new(-hw, hl, z0),
        Vec3::new(0.0, -hl, z0 + rise),
        Vec3::new(0.0, hl, z0 + rise),
    ];
    let mut m = Mesh {
        vertices: v,
        triangles: vec![[0, 2, 1], [0, 3, 2], [0, 1, 4], [3, 5, 2], [1, 2, 5], [1, 5, 4], [0, 4, 5], [0, 5, 3]],
        ..Mesh::default()
    };
    m.recompute_normals();
    m
}

fn cone(radius: f64, z0: f64, h: f64, sides: usize) -> Mesh {
    let mut m = Mesh::default();
    for i in 0..sides {
        let a = TAU * i as f64 / sides as f64;
        m.vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), z0));
    }
    let apex = sides as u32;
    let centre = apex + 1;
    m.vertices.push(Vec3::new(0.0, 0.0, z0 + h));
    m.vertices.push(Vec3::new(0.0, 0.0, z0));
    for i in 0..sides as u32 {
        let j = (i + 1) % sides as u32;
        m.triangles.push([i, j, apex]);
        m.triangles.push([i, centre, j]);
    }
    m.recompute_normals();
    m
}

/// Octahedron stretched to an ellipsoid-like canopy.
fn canopy(rx: f64, rz: f64, zc: f64) -> Mesh {
    let mut m = Mesh {
        vertices: vec![
            Vec3::new(rx, 0.0, zc),
            Vec3::new(0.0, rx, zc),
            Vec3::new(-rx, 0.0, zc),
            Vec3::new(0.0, -rx, zc),
            Vec3::new(0.0, 0.0, zc + rz),
            Vec3::new(0.0, 0.0, zc - rz),
        ],
        triangles: vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]],
        ..Mesh::default()
    };
    m.recompute_normals();
    m
}

fn merge(parts: Vec<Mesh>) -> Mesh {
    let mut out = Mesh::default();
    for p in &parts {
        out.append(p);
    }
    out
}

/// Building mesh for a style and one of the twenty types; the local
/// footprint is centred on the origin with the base at z = 0.
pub fn building_mesh(style_idx: usize, type_idx: usize) -> Mesh {
    let t = type_idx as f64;
    let w = 10.0 + ((type_idx * 7) % 11) as f64 * 2.0;
    let aspect = 1.0 + 0.3 * ((type_idx * 3 + style_idx) % 8) as f64;
    let l = w * aspect;
    let h = 8.0 + t * 1.5 + style_idx as f64;
    let style = STYLES[style_idx].name;
    let mut parts = match type_idx % 5 {
        0 => vec![prism(rect(0.0, 0.0, w, l), vec![], 0.0, h)],
        1 => {
            // L-shape: full-length wing plus a half-width wing.
            let wing = w * 0.45;
            vec![
                prism(rect(-w / 2.0 + wing / 2.0, 0.0, wing, l), vec![], 0.0, h),
                prism(rect(wing / 2.0, -l / 2.0 + wing / 2.0, w - wing, wing), vec![], 0.0, h * 0.8),
            ]
        }
        2 => {
            let mut inner = rect(0.0, 0.0, w * 0.5, l * 0.5);
            inner.reverse();
            vec![prism(rect(0.0, 0.0, w, l), vec![inner], 0.0, h)]
        }
        3 => vec![
            prism(rect(0.0, 0.0, w, l), vec![], 0.0, h * 0.3),
            prism(rect(0.0, 0.0, w * 0.6, l * 0.6), vec![], h * 0.3, h * 1.2),
        ],
        _ => vec![
            prism(rect(0.0, 0.0, w, l), vec![], 0.0, h * 0.5),
            prism(rect(0.0, 0.0, w * 0.75, l * 0.75), vec![], h * 0.5, h * 0.3),
            prism(rect(0.0, 0.0, w * 0.5, l * 0.5), vec![], h * 0.8, h * 0.3),
        ],
    };
    if PITCHED_ROOF_STYLES.contains(&style) && type_idx % 5 == 0 {
        parts.push(gable(w, l, h, w * 0.35));
    }
    with_facade_uvs(&merge(parts))
}

pub fn tree_mesh(kind: &str) -> Mesh {
    let trunk = prism(rect(0.0, 0.0, 0.4, 0.4), vec![], 0.0, 2.5);
    let crown = match kind {
        "conifer" => merge(vec![cone(2.2, 2.0, 4.0, 8), cone(1.6, 4.2, 3.5, 8)]),
        "palm" => canopy(3.0, 0.8, 6.5),
        _ => canopy(2.5, 2.5, 5.0),
    };
    let trunk = if kind == "palm" { prism(rect(0.0, 0.0, 0.35, 0.35), vec![], 0.0, 6.2) } else { trunk };
    merge(vec![trunk, crown])
}

pub fn streetlight_mesh(kind: &str) -> Mesh {
    let (h, arm) = if kind == "classic" { (4.5, 0.0) } else { (6.5, 1.5) };
    let mut parts = vec![prism(rect(0.0, 0.0, 0.18, 0.18), vec![], 0.0, h)];
    if arm > 0.0 {
        parts.push(prism(rect(arm / 2.0, 0.0, arm, 0.12), vec![], h - 0.15, 0.12));
        parts.push(prism(rect(arm, 0.0, 0.5, 0.3), vec![], h - 0.35, 0.2));
    } else {
        parts.push(prism(rect(0.0, 0.0, 0.5, 0.5), vec![], h, 0.6));
    }
    merge(parts)
}

/// Material ids of the builtin set with their tags.
pub fn material_presets() -> Vec<(&'static str, Vec<&'static str>, f64)> {
    let mut out: Vec<(&'static str, Vec<&'static str>, f64)> = vec![
        ("asphalt_01", vec!["road", "asphalt"], 0.2),
        ("asphalt_02", vec!["road", "asphalt", "worn"], 0.2),
        ("cobblestone", vec!["road", "stone", "historic"], 0.5),
        ("grass", vec!["ground", "grass"], 0.25),
        ("concrete_pavers", vec!["ground", "pavers", "urban"], 0.5),
        ("dry_soil", vec!["ground", "soil"], 0.25),
        ("gravel", vec!["ground", "gravel"], 0.5),
        ("water_calm", vec!["water"], 0.05),
        ("lawn", vec!["vegetation", "grass"], 0.25),
        ("bark", vec!["tree", "wood"], 1.0),
        ("foliage", vec!["tree", "leaves"], 1.0),
        ("lamp_metal", vec!["streetlight", "metal"], 1.0),
    ];
    for s in &STYLES {
        for m in s.facade_materials {
            if !out.iter().any(|(id, _, _)| *id == m) {
                out.push((m, vec!["facade"], 0.25));
            }
        }
    }
    for (id, tags, _) in &mut out {
        for s in &STYLES {
            if s.facade_materials.contains(id) || s.road_material == *id || s.ground_material == *id {
                tags.push(s.name);
            }
        }
    }
    out
}

pub fn material_def(id: &str, tags: &[&str], uv_tiling: f64) -> MaterialDef {
    let map = |kind: &str| format!("textures/{id}_{kind}.png");
    MaterialDef {
        id: id.to_string(),
        base_color: map("base_color"),
        normal: map("normal"),
        roughness: map("roughness"),
        metallic: map("metallic"),
        ambient_occlusion: map("ambient_occlusion"),
        uv_tiling,
        tags: tags.iter().map(|t| t.to_string()).collect(),
        description: format!("tileable {} material", id.replace('_', " ")),
    }
}

fn lib_asset(
    id: String,
    category: AssetCategory,
    mesh: Mesh,
    style: Option<&str>,
    building_type: Option<&str>,
    tags: Vec<String>,
    material: Option<&str>,
) -> LibraryAsset {
    LibraryAsset {
        mesh_uri: format!("meshes/{id}.obj"),
        bounds: mesh.aabb().expect("builtin meshes are nonempty"),
        id,
        category,
        style: style.map(str::to_string),
        building_type: building_type.map(str::to_string),
        tags,
        material: material.map(str::to_string),
        mesh,
    }
}

/// The default library, built in memory. Mesh and texture URIs are the
/// paths used by `write_library`.
pub fn builtin_libraries() -> Libraries {
    let mut assets = Vec::new();
    for (si, s) in STYLES.iter().enumerate() {
        for (ti, t) in BUILDING_TYPES.iter().enumerate() {
            assets.push(lib_asset(
                format!("{}_{:02}", s.name, ti),
                AssetCategory::Building,
                building_mesh(si, ti),
                Some(s.name),
                Some(t),
                vec![s.name.to_string(), t.to_string()],
                Some(s.facade_materials[ti % 2]),
            ));
        }
    }
    let tree_styles: [(&str, &[&str]); 3] = [
        ("broadleaf", &["modern", "classical", "colonial", "industrial", "brutalist", "cyberpunk"]),
        ("conifer", &["gothic", "scandinavian", "japanese"]),
        ("palm", &["mediterranean"]),
    ];
    for (kind, styles) in tree_styles {
        assets.push(lib_asset(
            format!("tree_{kind}"),
            AssetCategory::Tree,
            tree_mesh(kind),
            None,
            None,
            styles.iter().map(|s| s.to_string()).collect(),
            Some("foliage"),
        ));
    }
    let lamp_styles: [(&str, &[&str]); 2] = [
        ("modern", &["modern", "cyberpunk", "brutalist", "industrial", "scandinavian"]),
        ("classic", &["classical", "gothic", "colonial", "mediterranean", "japanese"]),
    ];
    for (kind, styles) in lamp_styles {
        assets.push(lib_asset(
            format!("streetlight_{kind}"),
            AssetCategory::Streetlight,
            streetlight_mesh(kind),
            None,
            None,
            styles.iter().map(|s| s.to_string()).collect(),
            Some("lamp_metal"),
        ));
    }
    let materials = material_presets()
        .into_iter()
        .map(|(id, tags, tiling)| material_def(id, &tags, tiling))
        .collect();
    let skyboxes = SKYBOXES
        .iter()
        .map(|s| SkyboxEntry {
            id: s.id.to_string(),
            hdr: format!("skyboxes/{}.hdr", s.id),
            description: s.description.to_string(),
            tags: s.tags.iter().map(|t| t.to_string()).collect(),
        })
        .collect();
    Libraries {
        assets: AssetLibrary::new(assets),
        materials: MaterialLibrary::new(materials),
        skyboxes: SkyboxLibrary { skyboxes },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_counts() {
        let libs = builtin_libraries();
        let buildings = libs.assets.by_category(AssetCategory::Building).count();
        assert_eq!(buildings, 200);
        for s in &STYLES {
            assert_eq!(libs.assets.by_style(s.name).count(), 20);
            for m in s.facade_materials.iter().chain([&s.road_material, &s.ground_material]) {
                assert!(libs.materials.get(m).is_some(), "{m}");
            }
        }
        assert_eq!(libs.skyboxes.skyboxes.len(), 6);
    }

    #[test]
    fn builtin_meshes_are_valid() {
        let libs = builtin_libraries();
        for a in &libs.assets.assets {
            a.mesh.validate().unwrap_or_else(|e| panic!("{}: {e}", a.id));
            let b = a.mesh.aabb().unwrap();
            assert!(b.min.z.abs() < 1e-12, "{}", a.id);
            assert!(a.mesh.signed_volume() > 0.0, "{}", a.id);
        }
    }
}
