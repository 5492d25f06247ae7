//! Shape-constrained asset requests, asset generators, shape judges and
//! the review–regenerate loop.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use majutsu_core::geometry::{
    extrude_footprint, render_iso_silhouette, sample_mesh_surface, silhouette_iou, with_facade_uvs, Mesh, PointCloud,
    SilhouetteMask,
};
use majutsu_core::layout::BuildingInstance;
use majutsu_core::math::Vec3;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ProviderConfig, ProviderMode};
use crate::error::ProviderError;
use crate::http::JsonClient;
use crate::mesh_io::{read_obj, y_up_to_z_up};

pub const ASSET_SCHEMA: &str = "majutsu-asset/1";
pub const JUDGE_SCHEMA: &str = "majutsu-judge/1";

/// Everything a 3D generator receives for one building. The coarse mesh
/// lives in the instance's OBB-local frame (OBB centre at the origin, OBB
/// `yaw` axis along +x, ground at z = 0), so a faithful candidate fits
/// back with unit horizontal scale.
#[derive(Clone, Debug, PartialEq)]
pub struct AssetRequest {
    pub instance: BuildingInstance,
    pub coarse_mesh: Mesh,
    pub iso_silhouette: SilhouetteMask,
    pub point_cloud: PointCloud,
    pub reference_image: Option<String>,
    pub prompt: String,
    pub seed: u64,
}

fn instance_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

impl AssetRequest {
    pub fn from_instance(
        instance: &BuildingInstance,
        prompt: &str,
        cfg: &ProviderConfig,
    ) -> Result<AssetRequest, ProviderError> {
        let bad = |e: majutsu_core::geometry::GeometryError| {
            ProviderError::InvalidRequest(format!("instance {}: {e}", instance.id))
        };
        let world = extrude_footprint(&instance.footprint, instance.target_height).map_err(bad)?;
        let (c, yaw) = (instance.obb.center, instance.obb.yaw);
        let (s, co) = (-yaw).sin_cos();
        let mut local = world;
        for v in &mut local.vertices {
            let (x, y) = (v.x - c.x, v.y - c.y);
            *v = Vec3::new(co * x - s * y, s * x + co * y, v.z);
        }
        local.recompute_normals();
        let coarse_mesh = with_facade_uvs(&local);
        let seed = instance_seed(cfg.seed, &instance.id);
        let iso_silhouette = render_iso_silhouette(&coarse_mesh, cfg.silhouette_resolution).map_err(bad)?;
        let point_cloud = sample_mesh_surface(&coarse_mesh, cfg.point_cloud_size, seed).map_err(bad)?;
        Ok(AssetRequest {
            instance: instance.clone(),
            coarse_mesh,
            iso_silhouette,
            point_cloud,
            reference_image: None,
            prompt: prompt.to_string(),
            seed,
        })
    }
}

pub trait AssetGenerator: Sync {
    /// One candidate for `req`; `attempt` counts from 1.
    fn generate(&self, req: &AssetRequest, attempt: u32) -> Result<Mesh, ProviderError>;
}

pub trait ShapeJudge: Sync {
    /// Shape agreement in `[0, 1]` between a candidate and the request.
    fn score(&self, req: &AssetRequest, candidate: &Mesh) -> Result<f64, ProviderError>;
}

/// Returns the coarse mesh itself, so its silhouette matches exactly.
pub struct OfflineAssetGenerator;

impl AssetGenerator for OfflineAssetGenerator {
    fn generate(&self, req: &AssetRequest, _attempt: u32) -> Result<Mesh, ProviderError> {
        Ok(req.coarse_mesh.clone())
    }
}

/// Default judge: IoU of fitted isometric silhouettes.
pub struct SilhouetteIouJudge;

impl ShapeJudge for SilhouetteIouJudge {
    fn score(&self, req: &AssetRequest, candidate: &Mesh) -> Result<f64, ProviderError> {
        let sil = render_iso_silhouette(candidate, req.iso_silhouette.resolution)
            .map_err(|e| ProviderError::InvalidProviderOutput(e.to_string()))?;
        silhouette_iou(&sil, &req.iso_silhouette).map_err(|e| ProviderError::InvalidProviderOutput(e.to_string()))
    }
}

pub fn silhouette_png(mask: &SilhouetteMask) -> Vec<u8> {
    let n = mask.resolution as u32;
    let img = image::GrayImage::from_fn(n, n, |x, y| {
        image::Luma([if *mask.bits.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).expect("png encode to memory");
    out.into_inner()
}

/// Little-endian f32 xyz triples.
pub fn point_cloud_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * 12);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Wire request for the asset provider.
pub fn asset_request_json(req: &AssetRequest, attempt: u32) -> Value {
    let b = req.coarse_mesh.aabb();
    json!({
        "schema": ASSET_SCHEMA,
        "instance_id": req.instance.id,
        "prompt": req.prompt,
        "attempt": attempt,
        "seed": req.seed,
        "silhouette_png": B64.encode(silhouette_png(&req.iso_silhouette)),
        "point_cloud": B64.encode(point_cloud_bytes(&req.point_cloud)),
        "point_count": req.point_cloud.len(),
        "reference_image": req.reference_image,
        "target_bounds": b,
    })
}

/// Accepts `{"mesh_obj": text, "up_axis": "z"|"y"}` (z-up by default) or
/// `{"mesh_glb": base64}`.
pub fn parse_asset_reply(reply: &Value) -> Result<Mesh, ProviderError> {
    let invalid = |m: String| ProviderError::InvalidProviderOutput(m);
    let mesh = if let Some(obj) = reply.get("mesh_obj").and_then(Value::as_str) {
        if obj.trim().is_empty() {
            return Err(invalid("empty".into()));
        }
        let mut m = read_obj(obj).map_err(|e| invalid(format!("mesh: {e}")))?;
        if reply.get("up_axis").and_then(Value::as_str) == Some("y") {
            y_up_to_z_up(&mut m);
        }
        m
    } else if let Some(glb) = reply.get("mesh_glb").and_then(Value::as_str) {
        let bytes = B64.decode(glb.trim()).map_err(|e| invalid(format!("mesh: {e}")))?;
        if bytes.is_empty() {
            return Err(invalid("empty".into()));
        }
        majutsu_core::scene::glb_to_mesh(&bytes).map_err(|e| invalid(format!("mesh: {e}")))?
    } else {
        return Err(invalid("missing mesh".into()));
    };
    if mesh.triangles.is_empty() {
        return Err(invalid("empty".into()));
    }
    mesh.validate().map_err(|e| invalid(format!("mesh: {e}")))?;
    Ok(mesh)
}

pub struct HttpAssetGenerator {
    client: JsonClient,
    url: String,
}

impl HttpAssetGenerator {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        Ok(HttpAssetGenerator {
            client: JsonClient::new(cfg)?,
            url: cfg.endpoint("asset")?,
        })
    }
}

impl AssetGenerator for HttpAssetGenerator {
    fn generate(&self, req: &AssetRequest, attempt: u32) -> Result<Mesh, ProviderError> {
        parse_asset_reply(&self.client.post(&self.url, &asset_request_json(req, attempt))?)
    }
}

/// Judge behind the `majutsu-judge/1` endpoint; replies `{"score": s}`.
pub struct HttpJudge {
    client: JsonClient,
    url: String,
}

impl HttpJudge {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        Ok(HttpJudge {
            client: JsonClient::new(cfg)?,
            url: cfg.endpoint("judge")?,
        })
    }
}

impl ShapeJudge for HttpJudge {
    fn score(&self, req: &AssetRequest, candidate: &Mesh) -> Result<f64, ProviderError> {
        let sil = render_iso_silhouette(candidate, req.iso_silhouette.resolution)
            .map_err(|e| ProviderError::InvalidProviderOutput(e.to_string()))?;
        let reply = self.client.post(
            &self.url,
            &json!({
                "schema": JUDGE_SCHEMA,
                "instance_id": req.instance.id,
                "prompt": req.prompt,
                "reference_png": B64.encode(silhouette_png(&req.iso_silhouette)),
                "candidate_png": B64.encode(silhouette_png(&sil)),
            }),
        )?;
        match reply.get("score").and_then(Value::as_f64) {
            Some(s) if (0.0..=1.0).contains(&s) => Ok(s),
            _ => Err(ProviderError::InvalidProviderOutput("score".into())),
        }
    }
}

/// Single candidate from the configured provider.
pub fn request_asset(req: &AssetRequest, cfg: &ProviderConfig) -> Result<Mesh, ProviderError> {
    match cfg.mode {
        ProviderMode::Offline => OfflineAssetGenerator.generate(req, 1),
        ProviderMode::External => HttpAssetGenerator::new(cfg)?.generate(req, 1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineStep {
    pub iteration: u32,
    pub score: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub steps: Vec<RefineStep>,
}

impl RefineTrace {
    pub fn best_score(&self) -> Option<f64> {
        self.steps.iter().map(|s| s.score).reduce(f64::max)
    }

    pub fn accepted(&self) -> bool {
        self.steps.last().is_some_and(|s| s.accepted)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOutcome {
    pub mesh: Mesh,
    pub trace: RefineTrace,
}

/// Generates, scores and regenerates until a candidate reaches the
/// threshold or the iteration budget runs out.
pub fn constrained_refine_loop(
    req: &AssetRequest,
    generator: &dyn AssetGenerator,
    judge: &dyn ShapeJudge,
    cfg: &ProviderConfig,
) -> Result<RefineOutcome, ProviderError> {
    let theta = cfg.iou_threshold;
    if !(0.0..=1.0).contains(&theta) {
        return Err(ProviderError::InvalidConfig(format!("iou_threshold {theta} outside [0, 1]")));
    }
    let mut trace = RefineTrace::default();
    for iteration in 1..=cfg.max_refine_iters {
        let candidate = generator.generate(req, iteration)?;
        let score = judge.score(req, &candidate)?;
        let accepted = score >= theta;
        trace.steps.push(RefineStep {
            iteration,
            score,
            accepted,
        });
        log::debug!("{}: refine iteration {iteration} score {score:.4}", req.instance.id);
        if accepted {
            return Ok(RefineOutcome { mesh: candidate, trace });
        }
    }
    Err(ProviderError::RefineExhausted {
        best_score: trace.best_score().unwrap_or(0.0),
        trace,
    })
}

/// Generator and judge for the configured mode.
pub fn providers_for(cfg: &ProviderConfig) -> Result<(Box<dyn AssetGenerator>, Box<dyn ShapeJudge>), ProviderError> {
    Ok(match cfg.mode {
        ProviderMode::Offline => (Box::new(OfflineAssetGenerator), Box::new(SilhouetteIouJudge)),
        ProviderMode::External => {
            let judge: Box<dyn ShapeJudge> = if cfg.endpoints.judge.is_some() || cfg.endpoints.base.is_some() {
                Box::new(HttpJudge::new(cfg)?)
            } else {
                Box::new(SilhouetteIouJudge)
            };
            (Box::new(HttpAssetGenerator::new(cfg)?), judge)
        }
    })
}
