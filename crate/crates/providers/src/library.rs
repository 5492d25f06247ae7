//! Asset, material and skybox libraries: JSON manifests, ingest-time
//! validation, export, and instance → asset matching.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use majutsu_core::geometry::Mesh;
use majutsu_core::layout::BuildingInstance;
use majutsu_core::math::Aabb;
use majutsu_core::scene::{AssetCategory, AssetEntry, MaterialDef};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::design::DesignSpec;
use crate::error::ProviderError;
use crate::mesh_io::{load_mesh, write_obj};

/// Declared bounds may differ from the mesh AABB by at most this much.
pub const BOUNDS_TOLERANCE: f64 = 1e-3;

pub const MAP_KINDS: [&str; 5] = ["base_color", "normal", "roughness", "metallic", "ambient_occlusion"];

#[derive(Clone, Debug, PartialEq)]
pub struct LibraryAsset {
    pub id: String,
    pub category: AssetCategory,
    pub style: Option<String>,
    pub building_type: Option<String>,
    pub tags: Vec<String>,
    pub mesh_uri: String,
    /// Z-up, map units.
    pub mesh: Mesh,
    pub bounds: Aabb,
    pub material: Option<String>,
}

impl LibraryAsset {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.style.as_deref() == Some(tag) || self.tags.iter().any(|t| t == tag)
    }

    pub fn to_entry(&self) -> AssetEntry {
        AssetEntry {
            id: self.id.clone(),
            category: self.category,
            mesh: self.mesh.clone(),
            bounds: self.bounds,
            material: self.material.clone(),
            style: self.style.clone(),
        }
    }

    /// Footprint aspect ratio, always ≥ 1.
    pub fn aspect(&self) -> f64 {
        let s = self.bounds.size();
        aspect(s.x, s.y)
    }
}

fn aspect(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssetLibrary {
    pub assets: Vec<LibraryAsset>,
    /// Problems corrected during ingest.
    pub warnings: Vec<String>,
    index: HashMap<String, usize>,
}

impl AssetLibrary {
    pub fn new(assets: Vec<LibraryAsset>) -> Self {
        let index = assets.iter().enumerate().map(|(i, a)| (a.id.clone(), i)).collect();
        AssetLibrary {
            assets,
            warnings: Vec::new(),
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&LibraryAsset> {
        self.index.get(id).map(|&i| &self.assets[i])
    }

    pub fn by_style<'a>(&'a self, style: &'a str) -> impl Iterator<Item = &'a LibraryAsset> + 'a {
        self.assets.iter().filter(move |a| a.style.as_deref() == Some(style))
    }

    pub fn by_category(&self, category: AssetCategory) -> impl Iterator<Item = &LibraryAsset> + '_ {
        self.assets.iter().filter(move |a| a.category == category)
    }

    pub fn by_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a LibraryAsset> + 'a {
        self.assets.iter().filter(move |a| a.has_tag(tag))
    }

    pub fn to_entry(&self, id: &str) -> Option<AssetEntry> {
        self.get(id).map(LibraryAsset::to_entry)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaterialLibrary {
    pub materials: Vec<MaterialDef>,
    index: HashMap<String, usize>,
}

impl MaterialLibrary {
    pub fn new(materials: Vec<MaterialDef>) -> Self {
        let index = materials.iter().enumerate().map(|(i, m)| (m.id.clone(), i)).collect();
        MaterialLibrary { materials, index }
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&MaterialDef> {
        self.index.get(id).map(|&i| &self.materials[i])
    }

    pub fn by_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a MaterialDef> + 'a {
        self.materials.iter().filter(move |m| m.tags.iter().any(|t| t == tag))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkyboxEntry {
    pub id: String,
    pub hdr: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SkyboxLibrary {
    pub skyboxes: Vec<SkyboxEntry>,
}

impl SkyboxLibrary {
    pub fn get(&self, id: &str) -> Option<&SkyboxEntry> {
        self.skyboxes.iter().find(|s| s.id == id)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Libraries {
    pub assets: AssetLibrary,
    pub materials: MaterialLibrary,
    pub skyboxes: SkyboxLibrary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpAxis {
    #[default]
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetManifestEntry {
    pub id: String,
    #[serde(default = "default_category")]
    pub category: AssetCategory,
    pub mesh: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub building_type: Option<String>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Aabb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
    /// Up axis of OBJ data; GLB is always y-up.
    #[serde(default)]
    pub up_axis: UpAxis,
}

fn default_category() -> AssetCategory {
    AssetCategory::Building
}

fn default_tiling() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialManifestEntry {
    pub id: String,
    pub maps: BTreeMap<String, String>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_tiling")]
    pub uv_tiling: f64,
}

fn manifest_err(path: &Path, message: impl ToString) -> ProviderError {
    ProviderError::Manifest {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn resolve(base: &Path, uri: &str) -> PathBuf {
    let p = Path::new(uri.strip_prefix("file://").unwrap_or(uri));
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn require_file(base: &Path, uri: &str) -> Result<PathBuf, ProviderError> {
    let p = resolve(base, uri);
    if uri.trim().is_empty() || !p.is_file() {
        return Err(ProviderError::DanglingUri(uri.to_string()));
    }
    Ok(p)
}

fn ingest_asset(base: &Path, e: AssetManifestEntry, warnings: &mut Vec<String>) -> Result<LibraryAsset, ProviderError> {
    let path = require_file(base, &e.mesh)?;
    let mesh = load_mesh(&path, e.up_axis == UpAxis::Z).map_err(|m| manifest_err(&path, m))?;
    mesh.validate().map_err(|m| manifest_err(&path, m))?;
    let actual = mesh.aabb().ok_or_else(|| manifest_err(&path, "empty mesh"))?;
    let bounds = match e.bounds {
        Some(b) if b.approx_eq(&actual, BOUNDS_TOLERANCE) => b,
        Some(b) => {
            let msg = format!(
                "asset {}: declared bounds {:?}..{:?} differ from mesh AABB {:?}..{:?}; using the mesh AABB",
                e.id, b.min, b.max, actual.min, actual.max
            );
            log::warn!("{msg}");
            warnings.push(msg);
            actual
        }
        None => actual,
    };
    Ok(LibraryAsset {
        id: e.id,
        category: e.category,
        style: e.style,
        building_type: e.building_type,
        tags: e.tags,
        mesh_uri: path.display().to_string(),
        mesh,
        bounds,
        material: e.material,
    })
}

fn ingest_material(base: &Path, e: MaterialManifestEntry) -> Result<MaterialDef, ProviderError> {
    let mut resolved = Vec::with_capacity(5);
    for kind in MAP_KINDS {
        let uri = e.maps.get(kind).filter(|u| !u.trim().is_empty()).ok_or_else(|| ProviderError::MissingMap {
            material_id: e.id.clone(),
            map_kind: kind.to_string(),
        })?;
        resolved.push(require_file(base, uri)?.display().to_string());
    }
    if let Some(extra) = e.maps.keys().find(|k| !MAP_KINDS.contains(&k.as_str())) {
        return Err(ProviderError::Manifest {
            path: base.display().to_string(),
            message: format!("material {}: unknown map kind {extra:?}", e.id),
        });
    }
    if !(e.uv_tiling > 0.0 && e.uv_tiling.is_finite()) {
        return Err(ProviderError::Manifest {
            path: base.display().to_string(),
            message: format!("material {}: uv_tiling must be positive", e.id),
        });
    }
    let mut it = resolved.into_iter();
    let mut next = || it.next().expect("five maps");
    Ok(MaterialDef {
        id: e.id,
        base_color: next(),
        normal: next(),
        roughness: next(),
        metallic: next(),
        ambient_occlusion: next(),
        uv_tiling: e.uv_tiling,
        tags: e.tags,
        description: e.description,
    })
}

fn entries<T: for<'de> Deserialize<'de>>(path: &Path, value: &Value, key: &str) -> Result<Vec<T>, ProviderError> {
    match value.get(key) {
        None => Ok(Vec::new()),
        Some(v) => serde_path_to_error::deserialize(v)
            .map_err(|e| manifest_err(path, format!("{key}.{}: {}", e.path(), e.inner()))),
    }
}

/// Reads and validates manifests. Each file may hold any of the keys
/// `assets`, `materials` and `skyboxes`; URIs resolve against the
/// manifest's directory.
pub fn ingest_libraries<P: AsRef<Path>>(manifest_paths: &[P]) -> Result<Libraries, ProviderError> {
    let mut assets = Vec::new();
    let mut materials = Vec::new();
    let mut skyboxes = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: [std::collections::HashSet<String>; 3] = Default::default();
    let mut check = |slot: usize, id: &str| -> Result<(), ProviderError> {
        if id.is_empty() {
            return Err(ProviderError::InvalidRequest("empty library id".into()));
        }
        if !seen[slot].insert(id.to_string()) {
            return Err(ProviderError::DuplicateId(id.to_string()));
        }
        Ok(())
    };
    for path in manifest_paths {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| manifest_err(path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| manifest_err(path, e))?;
        if !["assets", "materials", "skyboxes"].iter().any(|k| value.get(k).is_some()) {
            return Err(manifest_err(path, "expected an assets, materials or skyboxes array"));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for e in entries::<AssetManifestEntry>(path, &value, "assets")? {
            check(0, &e.id)?;
            assets.push(ingest_asset(base, e, &mut warnings)?);
        }
        for e in entries::<MaterialManifestEntry>(path, &value, "materials")? {
            check(1, &e.id)?;
            materials.push(ingest_material(base, e)?);
        }
        for mut e in entries::<SkyboxEntry>(path, &value, "skyboxes")? {
            check(2, &e.id)?;
            e.hdr = require_file(base, &e.hdr)?.display().to_string();
            skyboxes.push(e);
        }
    }
    let mut assets = AssetLibrary::new(assets);
    assets.warnings = warnings;
    Ok(Libraries {
        assets,
        materials: MaterialLibrary::new(materials),
        skyboxes: SkyboxLibrary { skyboxes },
    })
}

/// Ingests whichever of `assets.json`, `materials.json` and
/// `skyboxes.json` exist in `dir`.
pub fn ingest_library_dir(dir: &Path) -> Result<Libraries, ProviderError> {
    let paths: Vec<PathBuf> = ["assets.json", "materials.json", "skyboxes.json"]
        .iter()
        .map(|f| dir.join(f))
        .filter(|p| p.is_file())
        .collect();
    if paths.is_empty() {
        return Err(manifest_err(dir, "no manifests found"));
    }
    ingest_libraries(&paths)
}

fn texture_uri(id: &str, kind: &str) -> String {
    format!("textures/{id}_{kind}.png")
}

/// Manifest JSON for the three libraries, with the URIs `write_library`
/// writes.
pub fn export_manifests(libs: &Libraries) -> (Value, Value, Value) {
    let assets: Vec<AssetManifestEntry> = libs
        .assets
        .assets
        .iter()
        .map(|a| AssetManifestEntry {
            id: a.id.clone(),
            category: a.category,
            mesh: format!("meshes/{}.obj", a.id),
            style: a.style.clone(),
            building_type: a.building_type.clone(),
            tags: a.tags.clone(),
            bounds: Some(a.bounds),
            material: a.material.clone(),
            up_axis: UpAxis::Z,
        })
        .collect();
    let materials: Vec<MaterialManifestEntry> = libs
        .materials
        .materials
        .iter()
        .map(|m| MaterialManifestEntry {
            id: m.id.clone(),
            maps: MAP_KINDS.iter().map(|k| (k.to_string(), texture_uri(&m.id, k))).collect(),
            tags: m.tags.clone(),
            description: m.description.clone(),
            uv_tiling: m.uv_tiling,
        })
        .collect();
    let skyboxes: Vec<SkyboxEntry> = libs
        .skyboxes
        .skyboxes
        .iter()
        .map(|s| SkyboxEntry {
            hdr: format!("skyboxes/{}.hdr", s.id),
            ..s.clone()
        })
        .collect();
    (
        json!({ "assets": assets }),
        json!({ "materials": materials }),
        json!({ "skyboxes": skyboxes }),
    )
}

fn hash_bytes(parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().into()
}

/// Flat 8×8 placeholder texture; colour derives from the material id.
pub fn placeholder_texture(id: &str, kind: &str) -> Vec<u8> {
    let h = hash_bytes(&[id]);
    let rgb = match kind {
        "normal" => [128, 128, 255],
        "roughness" => [160 + h[3] % 80; 3],
        "metallic" => [if id.contains("metal") || id.contains("glass") { 200 } else { 10 }; 3],
        "ambient_occlusion" => [230; 3],
        _ => [h[0] / 2 + 64, h[1] / 2 + 64, h[2] / 2 + 64],
    };
    let img = image::RgbImage::from_pixel(8, 8, image::Rgb(rgb));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).expect("png encode to memory");
    out.into_inner()
}

fn rgbe(rgb: [f32; 3]) -> [u8; 4] {
    let m = rgb[0].max(rgb[1]).max(rgb[2]);
    if m < 1e-32 {
        return [0; 4];
    }
    let e = m.log2().floor() as i32 + 1;
    let scale = 256.0 / 2f32.powi(e);
    let c = |v: f32| (v * scale).clamp(0.0, 255.0) as u8;
    [c(rgb[0]), c(rgb[1]), c(rgb[2]), (e + 128) as u8]
}

/// Small equirectangular Radiance HDR with a vertical zenith → ground
/// gradient tinted by the skybox id.
pub fn placeholder_hdr(id: &str) -> Vec<u8> {
    let (w, hgt) = (32usize, 16usize);
    let h = hash_bytes(&[id]);
    let zenith = [0.2 + h[0] as f32 / 600.0, 0.35 + h[1] as f32 / 600.0, 0.8 + h[2] as f32 / 400.0];
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {hgt} +X {w}\n").into_bytes();
    for row in 0..hgt {
        let t = row as f32 / (hgt - 1) as f32;
        let col = if t < 0.5 {
            let k = t * 2.0;
            [zenith[0] * (1.0 - k) + k, zenith[1] * (1.0 - k) + k, zenith[2] * (1.0 - k) + k]
        } else {
            [0.25, 0.22, 0.2]
        };
        for _ in 0..w {
            out.extend_from_slice(&rgbe(col));
        }
    }
    out
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ProviderError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| manifest_err(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| manifest_err(path, e))
}

/// Writes manifests, OBJ meshes, placeholder textures and HDRs so that
/// `ingest_library_dir(dir)` reproduces the libraries.
pub fn write_library(libs: &Libraries, dir: &Path) -> Result<(), ProviderError> {
    let (assets, materials, skyboxes) = export_manifests(libs);
    for a in &libs.assets.assets {
        write(&dir.join(format!("meshes/{}.obj", a.id)), write_obj(&a.mesh).as_bytes())?;
    }
    for m in &libs.materials.materials {
        for kind in MAP_KINDS {
            write(&dir.join(texture_uri(&m.id, kind)), &placeholder_texture(&m.id, kind))?;
        }
    }
    for s in &libs.skyboxes.skyboxes {
        write(&dir.join(format!("skyboxes/{}.hdr", s.id)), &placeholder_hdr(&s.id))?;
    }
    for (name, v) in [("assets.json", assets), ("materials.json", materials), ("skyboxes.json", skyboxes)] {
        let text = serde_json::to_string_pretty(&v).expect("manifest serializes");
        write(&dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssetMatch {
    /// Building instance id → library asset id.
    pub assignments: BTreeMap<String, String>,
    /// True when no asset carried the requested style and the whole
    /// building library was used instead.
    pub fell_back: bool,
}

/// Seeded tie-break key for assigning `asset_id` to `instance_id`.
pub fn tie_break_key(seed: u64, instance_id: &str, asset_id: &str) -> u64 {
    let h = hash_bytes(&[&seed.to_string(), instance_id, asset_id]);
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

/// Aspect differences within this distance count as ties.
const ASPECT_TIE: f64 = 1e-9;

/// Picks one building asset per instance: candidates carry the design's
/// style (or, failing that, any building), the winner minimises the
/// footprint aspect-ratio difference to the instance OBB, and ties go to
/// the smallest seeded hash.
pub fn match_assets(
    instances: &[BuildingInstance],
    spec: &DesignSpec,
    lib: &AssetLibrary,
    seed: u64,
) -> Result<AssetMatch, ProviderError> {
    let buildings: Vec<&LibraryAsset> = lib.by_category(AssetCategory::Building).collect();
    if buildings.is_empty() {
        return Err(ProviderError::EmptyLibrary);
    }
    let styled: Vec<&LibraryAsset> = buildings
        .iter()
        .copied()
        .filter(|a| a.style.as_deref() == Some(spec.style_tag.as_str()))
        .collect();
    let fell_back = styled.is_empty();
    let candidates = if fell_back {
        log::warn!(
            "no building asset has style {:?}; matching against the full library",
            spec.style_tag
        );
        buildings
    } else {
        styled
    };
    let mut assignments = BTreeMap::new();
    for inst in instances {
        let target = aspect(inst.obb.half_w, inst.obb.half_l);
        let diff = |a: &LibraryAsset| {
            let d = (a.aspect() - target).abs();
            if d.is_nan() {
                f64::INFINITY
            } else {
                d
            }
        };
        let best = candidates.iter().map(|a| diff(a)).fold(f64::INFINITY, f64::min);
        let chosen = candidates
            .iter()
            .filter(|a| diff(a) <= best + ASPECT_TIE)
            .min_by_key(|a| (tie_break_key(seed, &inst.id, &a.id), a.id.as_str()))
            .expect("nonempty candidates");
        assignments.insert(inst.id.clone(), chosen.id.clone());
    }
    Ok(AssetMatch { assignments, fell_back })
}

/// Tree or streetlight asset for a style: first asset of the category
/// tagged with the style, else the first of the category.
pub fn pick_prop<'a>(lib: &'a AssetLibrary, category: AssetCategory, style: &str) -> Option<&'a LibraryAsset> {
    lib.by_category(category)
        .find(|a| a.has_tag(style))
        .or_else(|| lib.by_category(category).next())
}
