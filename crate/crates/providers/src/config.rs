use serde::{Deserialize, Serialize};

use crate::error::ProviderError;

/// Environment variable naming the base URL of external providers.
pub const PROVIDER_URL_ENV: &str = "MAJUTSU_PROVIDER_URL";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    External,
    #[default]
    Offline,
}

/// Per-kind endpoint URLs. Unset kinds fall back to `<base>/<kind>`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Endpoints {
    pub base: Option<String>,
    pub design: Option<String>,
    pub layout: Option<String>,
    pub asset: Option<String>,
    pub judge: Option<String>,
}

impl Endpoints {
    pub fn resolve(&self, kind: &str) -> Option<String> {
        let explicit = match kind {
            "design" => &self.design,
            "layout" => &self.layout,
            "asset" => &self.asset,
            "judge" => &self.judge,
            _ => &None,
        };
        explicit
            .clone()
            .or_else(|| self.base.as_ref().map(|b| format!("{}/{kind}", b.trim_end_matches('/'))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub endpoints: Endpoints,
    pub timeout_secs: f64,
    pub retries: u32,
    /// Base delay of the exponential retry backoff.
    pub backoff_ms: u64,
    pub cfg_scale: f64,
    pub steps: u32,
    pub seed: u64,
    pub iou_threshold: f64,
    pub max_refine_iters: u32,
    /// Side length of generated layout maps in pixels.
    pub map_size: usize,
    pub meters_per_pixel: f64,
    pub h_max: f64,
    /// Resolution of the isometric silhouette used as the image constraint.
    pub silhouette_resolution: usize,
    /// Number of surface samples in the point-cloud constraint.
    pub point_cloud_size: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            mode: ProviderMode::Offline,
            endpoints: Endpoints::default(),
            timeout_secs: 60.0,
            retries: 2,
            backoff_ms: 200,
            cfg_scale: 9.0,
            steps: 50,
            seed: 0,
            iou_threshold: 0.85,
            max_refine_iters: 3,
            map_size: majutsu_core::layout::DEFAULT_MAP_SIZE,
            meters_per_pixel: majutsu_core::layout::DEFAULT_METERS_PER_PIXEL,
            h_max: majutsu_core::layout::DEFAULT_H_MAX,
            silhouette_resolution: 128,
            point_cloud_size: 2048,
        }
    }
}

impl ProviderConfig {
    pub fn offline(seed: u64) -> Self {
        ProviderConfig {
            seed,
            ..Self::default()
        }
    }

    /// Fills the endpoint base from `MAJUTSU_PROVIDER_URL` when unset.
    pub fn with_env(mut self) -> Self {
        if self.endpoints.base.is_none() {
            self.endpoints.base = std::env::var(PROVIDER_URL_ENV).ok().filter(|s| !s.is_empty());
        }
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::InvalidConfig(m.into()));
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return bad("iou_threshold must lie in [0, 1]");
        }
        if self.max_refine_iters == 0 {
            return bad("max_refine_iters must be at least 1");
        }
        if !(self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive");
        }
        if self.map_size < 16 {
            return bad("map_size must be at least 16");
        }
        if !(self.meters_per_pixel > 0.0 && self.meters_per_pixel.is_finite()) {
            return bad("meters_per_pixel must be positive");
        }
        if !(self.h_max > majutsu_core::layout::DEFAULT_MIN_BUILDING_HEIGHT) {
            return bad("h_max must exceed the minimum building height");
        }
        if self.silhouette_resolution < 8 || self.point_cloud_size == 0 {
            return bad("silhouette_resolution ≥ 8 and point_cloud_size ≥ 1 required");
        }
        Ok(())
    }

    pub fn endpoint(&self, kind: &str) -> Result<String, ProviderError> {
        self.endpoints
            .resolve(kind)
            .ok_or_else(|| ProviderError::ProviderUnavailable(format!("no {kind} endpoint configured")))
    }
}
