//! The four-stage generation pipeline: design, layout, assets and
//! materials, scene assembly; plus artifact writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use majutsu_core::geometry::Mesh;
use majutsu_core::layout::{
    decode_height_image, decode_layout_image, encode_height_image, encode_layout_image, extract_building_instances,
    repair_consistency, BuildingInstance, HeightMap, LayoutMap, SemanticClass, DEFAULT_MIN_BUILDING_HEIGHT,
};
use majutsu_core::placement::{poisson_disk_sample, sample_roadside_points, PlacementPoint, PointKind};
use majutsu_core::scene::{
    assemble_scene, export_gltf, inspect_glb, save_document_to_dir, validate_glb, AssembleInputs, AssetCategory,
    AssetEntry, LayerKind, MaterialDef, SceneDocument, SkyboxDef,
};
use majutsu_providers::library::{placeholder_hdr, placeholder_texture, tie_break_key};
use majutsu_providers::{
    builtin_libraries, constrained_refine_loop, design_scene, generate_layout_pair, ingest_libraries,
    ingest_library_dir, match_assets, pick_prop, providers_for, AssetGenerator, AssetRequest, DesignSpec, Libraries,
    ProviderConfig, ProviderError, RefineTrace, ShapeJudge,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{AssetSource, PipelineConfig, PipelineInput};
use crate::error::{PipelineError, Stage};

pub const DESIGN_FILE: &str = "design.json";
pub const LAYOUT_FILE: &str = "layout.png";
pub const HEIGHT_FILE: &str = "height.png";
pub const SCENE_FILE: &str = "scene.majutsu.json";
pub const GLB_FILE: &str = "scene.glb";
pub const REPORT_FILE: &str = "report.json";

/// The six files every run writes.
pub const ARTIFACTS: [&str; 6] = [DESIGN_FILE, LAYOUT_FILE, HEIGHT_FILE, SCENE_FILE, GLB_FILE, REPORT_FILE];

/// Builtin library unless paths are given. A directory is read through
/// its `assets.json`, `materials.json` and `skyboxes.json`; a file is
/// read as a manifest.
pub fn load_libraries(paths: &[PathBuf]) -> Result<Libraries, PipelineError> {
    if paths.is_empty() {
        return Ok(builtin_libraries());
    }
    let err = |e: ProviderError| PipelineError::stage(Stage::Libraries, e);
    let (dirs, files): (Vec<&PathBuf>, Vec<&PathBuf>) = paths.iter().partition(|p| p.is_dir());
    let mut libs = if files.is_empty() {
        Libraries::default()
    } else {
        ingest_libraries(&files).map_err(err)?
    };
    for d in dirs {
        let more = ingest_library_dir(d).map_err(err)?;
        let mut assets = std::mem::take(&mut libs.assets.assets);
        for a in more.assets.assets {
            if assets.iter().any(|x| x.id == a.id) {
                return Err(err(ProviderError::DuplicateId(a.id)));
            }
            assets.push(a);
        }
        let mut warnings = std::mem::take(&mut libs.assets.warnings);
        warnings.extend(more.assets.warnings);
        libs.assets = majutsu_providers::AssetLibrary::new(assets);
        libs.assets.warnings = warnings;
        let mut materials = std::mem::take(&mut libs.materials.materials);
        for m in more.materials.materials {
            if materials.iter().any(|x| x.id == m.id) {
                return Err(err(ProviderError::DuplicateId(m.id)));
            }
            materials.push(m);
        }
        libs.materials = majutsu_providers::MaterialLibrary::new(materials);
        for s in more.skyboxes.skyboxes {
            if libs.skyboxes.get(&s.id).is_some() {
                return Err(err(ProviderError::DuplicateId(s.id)));
            }
            libs.skyboxes.skyboxes.push(s);
        }
    }
    Ok(libs)
}

/// How one building instance obtained its mesh.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetOrigin {
    Generated,
    /// The refine loop ran out of iterations; the coarse extrusion is used.
    CoarseFallback,
    Library,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceAsset {
    pub instance: String,
    pub asset: String,
    pub origin: AssetOrigin,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<RefineTrace>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Counts {
    pub buildings: usize,
    pub trees: usize,
    pub streetlights: usize,
    pub instances: usize,
    pub layers: usize,
    pub materials: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub glb_nodes: usize,
    pub repaired_low_buildings: usize,
    pub repaired_stray_heights: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PipelineReport {
    pub name: String,
    pub seed: u64,
    pub mode: String,
    pub asset_source: String,
    pub style: String,
    pub timings_ms: BTreeMap<String, f64>,
    pub counts: Counts,
    /// Scene nodes equal four layers, the sky and one per instance.
    pub node_count_ok: bool,
    pub glb_valid: bool,
    pub library_style_fallback: bool,
    pub assets: Vec<InstanceAsset>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

/// Everything produced in memory by one pipeline run.
pub struct SceneBuild {
    pub design: DesignSpec,
    pub layout: LayoutMap,
    pub hmap: HeightMap,
    pub instances: Vec<BuildingInstance>,
    pub document: SceneDocument,
    pub report: PipelineReport,
}

struct Timer {
    start: Instant,
    timings: BTreeMap<String, f64>,
}

impl Timer {
    fn new() -> Self {
        Timer {
            start: Instant::now(),
            timings: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.timings
            .insert(stage.to_string(), (now - self.start).as_secs_f64() * 1e3);
        self.start = now;
    }
}

fn read_layout_files(
    layout: &Path,
    height: &Path,
    provider: &ProviderConfig,
) -> Result<(LayoutMap, HeightMap, majutsu_core::layout::ValidationReport), PipelineError> {
    let lbytes = std::fs::read(layout).map_err(|e| PipelineError::io(layout, e))?;
    let hbytes = std::fs::read(height).map_err(|e| PipelineError::io(height, e))?;
    let bad = |e: majutsu_core::layout::LayoutError| PipelineError::stage(Stage::Layout, e);
    let mut lmap = decode_layout_image(&lbytes).map_err(bad)?;
    lmap.meters_per_pixel = provider.meters_per_pixel;
    let hmap = decode_height_image(&hbytes, provider.h_max).map_err(bad)?;
    let (hmap, report) = repair_consistency(&lmap, &hmap, DEFAULT_MIN_BUILDING_HEIGHT).map_err(bad)?;
    Ok((lmap, hmap, report))
}

fn layer_material(
    kind: LayerKind,
    spec: &DesignSpec,
    libs: &Libraries,
    warnings: &mut Vec<String>,
) -> Result<MaterialDef, PipelineError> {
    let name = kind.name();
    if let Some(id) = spec.layer_material(name) {
        if let Some(m) = libs.materials.get(&id) {
            return Ok(m.clone());
        }
        warnings.push(format!("{name} material {id:?} is not in the library; using a tagged substitute"));
    }
    let tagged = |m: &&MaterialDef| m.tags.iter().any(|t| t == name);
    libs.materials
        .materials
        .iter()
        .filter(tagged)
        .find(|m| m.tags.iter().any(|t| *t == spec.style_tag))
        .or_else(|| libs.materials.materials.iter().find(tagged))
        .cloned()
        .ok_or_else(|| PipelineError::stage(Stage::Materials, format!("no material tagged {name:?}")))
}

fn pick_skybox(spec: &DesignSpec, libs: &Libraries) -> Result<SkyboxDef, PipelineError> {
    let entry = spec
        .skybox_id()
        .and_then(|id| libs.skyboxes.get(&id))
        .or_else(|| {
            let text = spec.skymap_design.to_lowercase();
            libs.skyboxes
                .skyboxes
                .iter()
                .find(|s| s.tags.iter().any(|t| text.split(|c: char| !c.is_alphanumeric()).any(|w| w == t)))
        })
        .or_else(|| libs.skyboxes.skyboxes.first())
        .ok_or_else(|| PipelineError::stage(Stage::Materials, "skybox library is empty"))?;
    Ok(SkyboxDef {
        id: entry.id.clone(),
        hdr_ref: entry.hdr.clone(),
        rotation: 0.0,
    })
}

/// Facade material for a generated building: one of the library's
/// facade materials carrying the style, chosen by a seeded hash.
fn facade_material(libs: &Libraries, style: &str, seed: u64, instance: &str) -> Option<String> {
    let facades: Vec<&MaterialDef> = libs.materials.by_tag("facade").collect();
    let styled: Vec<&MaterialDef> = facades.iter().copied().filter(|m| m.tags.iter().any(|t| t == style)).collect();
    let pool = if styled.is_empty() { facades } else { styled };
    if pool.is_empty() {
        return None;
    }
    let k = tie_break_key(seed, instance, "facade") as usize % pool.len();
    Some(pool[k].id.clone())
}

fn generated_entry(inst: &BuildingInstance, mesh: Mesh, material: Option<String>, style: &str) -> Result<AssetEntry, String> {
    mesh.validate()?;
    let bounds = mesh.aabb().ok_or("empty mesh")?;
    Ok(AssetEntry {
        id: format!("gen_{}", inst.id),
        category: AssetCategory::Building,
        mesh,
        bounds,
        material,
        style: Some(style.to_string()),
    })
}

/// Runs the refine loop for every instance with at most `fan_out`
/// concurrent provider calls. Exhausted loops fall back to the coarse
/// extrusion; other provider errors abort the stage.
fn generate_assets(
    cfg: &PipelineConfig,
    spec: &DesignSpec,
    libs: &Libraries,
    instances: &[BuildingInstance],
    generator: &dyn AssetGenerator,
    judge: &dyn ShapeJudge,
) -> Result<(BTreeMap<String, AssetEntry>, Vec<InstanceAsset>), PipelineError> {
    let provider = cfg.effective_provider();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.fan_out)
        .build()
        .map_err(|e| PipelineError::stage(Stage::Assets, e))?;
    let prompt = spec.assets_design.as_str();
    let results: Vec<Result<(AssetEntry, InstanceAsset), PipelineError>> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                let err = |e: &dyn std::fmt::Display| PipelineError::stage(Stage::Assets, format!("{}: {e}", inst.id));
                let req = AssetRequest::from_instance(inst, prompt, &provider).map_err(|e| err(&e))?;
                let (mesh, origin, trace) = match constrained_refine_loop(&req, generator, judge, &provider) {
                    Ok(out) => (out.mesh, AssetOrigin::Generated, out.trace),
                    Err(ProviderError::RefineExhausted { best_score, trace }) => {
                        log::warn!("{}: refine exhausted at {best_score:.3}; using the coarse mesh", inst.id);
                        (req.coarse_mesh.clone(), AssetOrigin::CoarseFallback, trace)
                    }
                    Err(e) => return Err(err(&e)),
                };
                let material = facade_material(libs, &spec.style_tag, cfg.seed, &inst.id);
                let entry = generated_entry(inst, mesh, material, &spec.style_tag).map_err(|e| err(&e))?;
                let record = InstanceAsset {
                    instance: inst.id.clone(),
                    asset: entry.id.clone(),
                    origin,
                    trace: Some(trace),
                };
                Ok((entry, record))
            })
            .collect()
    });
    let mut assets = BTreeMap::new();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        let (entry, record) = r?;
        assets.insert(record.instance.clone(), entry);
        records.push(record);
    }
    Ok((assets, records))
}

/// Runs every stage in memory.
pub fn build_scene(cfg: &PipelineConfig, libs: &Libraries) -> Result<SceneBuild, PipelineError> {
    cfg.validate()?;
    let provider = cfg.effective_provider();
    let mut timer = Timer::new();
    let mut warnings: Vec<String> = libs.assets.warnings.clone();

    let input = cfg.input()?;
    let design_prompt = match &input {
        PipelineInput::Prompt(p) => p.to_string(),
        PipelineInput::Layout { .. } => cfg.style_hint.clone().unwrap_or_else(|| "city".into()),
    };
    let design = design_scene(&design_prompt, &provider).map_err(|e| PipelineError::stage(Stage::Design, e))?;
    log::info!("design: style {}", design.style_tag);
    timer.lap(Stage::Design);

    let (layout, hmap, repaired) = match input {
        PipelineInput::Prompt(_) => {
            let pair = generate_layout_pair(&design, &provider).map_err(|e| PipelineError::stage(Stage::Layout, e))?;
            (pair.layout, pair.hmap, pair.repaired)
        }
        PipelineInput::Layout { layout, height } => read_layout_files(layout, height, &provider)?,
    };
    if !repaired.is_valid() {
        warnings.push(format!(
            "layout repair: {} low building pixels raised, {} stray heights cleared",
            repaired.low_buildings.len(),
            repaired.stray_heights.len()
        ));
    }
    timer.lap(Stage::Layout);

    let instances =
        extract_building_instances(&layout, &hmap).map_err(|e| PipelineError::stage(Stage::Instances, e))?;
    log::info!("{} building instances", instances.len());
    timer.lap(Stage::Instances);

    let (assets, asset_records, style_fallback) = match cfg.asset_source {
        AssetSource::Generate => {
            let (generator, judge) = providers_for(&provider).map_err(|e| PipelineError::stage(Stage::Assets, e))?;
            let (a, r) = generate_assets(cfg, &design, libs, &instances, generator.as_ref(), judge.as_ref())?;
            (a, r, false)
        }
        AssetSource::Library => {
            let m = match_assets(&instances, &design, &libs.assets, cfg.seed)
                .map_err(|e| PipelineError::stage(Stage::Assets, e))?;
            let mut assets = BTreeMap::new();
            let mut records = Vec::new();
            for (inst, asset_id) in &m.assignments {
                let entry = libs.assets.to_entry(asset_id).expect("matched asset exists");
                assets.insert(inst.clone(), entry);
                records.push(InstanceAsset {
                    instance: inst.clone(),
                    asset: asset_id.clone(),
                    origin: AssetOrigin::Library,
                    trace: None,
                });
            }
            if m.fell_back {
                warnings.push(format!("no library building has style {:?}", design.style_tag));
            }
            (assets, records, m.fell_back)
        }
    };
    timer.lap(Stage::Assets);

    let sampling = cfg.effective_sampling();
    let mut placements: Vec<PlacementPoint> =
        poisson_disk_sample(&layout.mask(SemanticClass::Vegetation), layout.meters_per_pixel, &sampling);
    placements.extend(sample_roadside_points(&layout, &sampling));
    let tree = pick_prop(&libs.assets, AssetCategory::Tree, &design.style_tag).map(|a| a.to_entry());
    let lamp = pick_prop(&libs.assets, AssetCategory::Streetlight, &design.style_tag).map(|a| a.to_entry());
    for (kind, present, what) in [
        (PointKind::Tree, tree.is_some(), "tree"),
        (PointKind::Streetlight, lamp.is_some(), "streetlight"),
    ] {
        if !present && placements.iter().any(|p| p.kind == kind) {
            warnings.push(format!("library has no {what} asset; {what} points dropped"));
            placements.retain(|p| p.kind != kind);
        }
    }
    timer.lap(Stage::Placement);

    let mut layer_materials = BTreeMap::new();
    for kind in LayerKind::ALL {
        layer_materials.insert(kind, layer_material(kind, &design, libs, &mut warnings)?);
    }
    let skybox = pick_skybox(&design, libs)?;
    timer.lap(Stage::Materials);

    let document = assemble_scene(&AssembleInputs {
        name: cfg.scene_name(),
        seed: cfg.seed,
        layout: &layout,
        hmap: &hmap,
        instances: &instances,
        assets: &assets,
        placements: &placements,
        tree_asset: tree.as_ref(),
        streetlight_asset: lamp.as_ref(),
        layer_materials: &layer_materials,
        extra_materials: &libs.materials.materials,
        skybox,
    })
    .map_err(|e| PipelineError::stage(Stage::Assembly, e))?;
    timer.lap(Stage::Assembly);

    let (vertices, triangles) = document.vertex_and_triangle_counts();
    let count = |c: AssetCategory| document.instances.iter().filter(|i| i.category == c).count();
    let report = PipelineReport {
        name: document.metadata.name.clone(),
        seed: cfg.seed,
        mode: format!("{:?}", provider.mode).to_lowercase(),
        asset_source: format!("{:?}", cfg.asset_source).to_lowercase(),
        style: design.style_tag.clone(),
        timings_ms: timer.timings,
        counts: Counts {
            buildings: count(AssetCategory::Building),
            trees: count(AssetCategory::Tree),
            streetlights: count(AssetCategory::Streetlight),
            instances: document.instances.len(),
            layers: document.layers.len(),
            materials: document.materials.len(),
            vertices,
            triangles,
            glb_nodes: 0,
            repaired_low_buildings: repaired.low_buildings.len(),
            repaired_stray_heights: repaired.stray_heights.len(),
        },
        node_count_ok: false,
        glb_valid: false,
        library_style_fallback: style_fallback,
        assets: asset_records,
        warnings,
        artifacts: Vec::new(),
    };
    Ok(SceneBuild {
        design,
        layout,
        hmap,
        instances,
        document,
        report,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

/// Writes placeholder files for relative texture and skybox URIs that do
/// not exist yet under `dir`; absolute URIs point into an ingested
/// library and are left alone.
pub fn write_scene_textures(doc: &SceneDocument, dir: &Path) -> Result<usize, PipelineError> {
    let mut written = 0;
    let mut put = |uri: &str, bytes: &dyn Fn() -> Vec<u8>| -> Result<(), PipelineError> {
        let p = Path::new(uri);
        if p.is_relative() && !uri.contains("..") && !dir.join(p).exists() {
            write_file(&dir.join(p), &bytes())?;
            written += 1;
        }
        Ok(())
    };
    for m in doc.materials.values() {
        for (kind, uri) in m.maps() {
            put(uri, &|| placeholder_texture(&m.id, kind))?;
        }
    }
    put(&doc.skybox.hdr_ref, &|| placeholder_hdr(&doc.skybox.id))?;
    Ok(written)
}

/// Exports the GLB and fills in the structural checks of the report.
pub fn export_checked(doc: &SceneDocument, report: &mut PipelineReport) -> Result<Vec<u8>, PipelineError> {
    let glb = export_gltf(doc).map_err(|e| PipelineError::stage(Stage::Export, e))?;
    validate_glb(&glb).map_err(|e| PipelineError::stage(Stage::Export, e))?;
    let summary = inspect_glb(&glb).map_err(|e| PipelineError::stage(Stage::Export, e))?;
    report.glb_valid = true;
    report.counts.glb_nodes = summary.node_count;
    report.node_count_ok = summary.node_count == 5 + doc.instances.len();
    Ok(glb)
}

/// Runs the pipeline and writes the six artifacts into `cfg.out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let total = Instant::now();
    cfg.validate()?;
    let libs = load_libraries(&cfg.libs)?;
    let SceneBuild {
        design,
        layout,
        hmap,
        document,
        mut report,
        ..
    } = build_scene(cfg, &libs)?;
    let out = &cfg.out_dir;
    let write_start = Instant::now();
    let design_json = json!({
        "schema": majutsu_providers::design::DESIGN_SCHEMA,
        "prompt": cfg.prompt,
        "seed": cfg.seed,
        "design": design,
    });
    write_file(
        &out.join(DESIGN_FILE),
        &serde_json::to_vec_pretty(&design_json).expect("design serializes"),
    )?;
    write_file(&out.join(LAYOUT_FILE), &encode_layout_image(&layout))?;
    write_file(&out.join(HEIGHT_FILE), &encode_height_image(&hmap))?;
    save_document_to_dir(&document, out, SCENE_FILE).map_err(|e| PipelineError::stage(Stage::Export, e))?;
    let mut artifacts = vec![DESIGN_FILE, LAYOUT_FILE, HEIGHT_FILE, SCENE_FILE];
    if cfg.export_glb {
        let glb = export_checked(&document, &mut report)?;
        write_file(&out.join(GLB_FILE), &glb)?;
        artifacts.push(GLB_FILE);
    }
    if cfg.write_textures {
        write_scene_textures(&document, out)?;
    }
    artifacts.push(REPORT_FILE);
    report.artifacts = artifacts.into_iter().map(String::from).collect();
    report
        .timings_ms
        .insert("write".into(), write_start.elapsed().as_secs_f64() * 1e3);
    report
        .timings_ms
        .insert("total".into(), total.elapsed().as_secs_f64() * 1e3);
    write_file(
        &out.join(REPORT_FILE),
        &serde_json::to_vec_pretty(&report).expect("report serializes"),
    )?;
    log::info!(
        "wrote {} ({} buildings, {} instances)",
        out.display(),
        report.counts.buildings,
        report.counts.instances
    );
    Ok(report)
}
