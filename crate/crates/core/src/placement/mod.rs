//! Procedural placement of vegetation and roadside furniture.

mod distance;
mod poisson;
mod roadside;

use serde::{Deserialize, Serialize};

pub use distance::{distance_transform, sample_bilinear};
pub use poisson::poisson_disk_sample;
pub use roadside::{offset_curves, resample_polyline, sample_roadside_points, OffsetCurve};

use crate::math::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointKind {
    Tree,
    Streetlight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointSource {
    VegetationFill,
    Roadside,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementPoint {
    pub position: Vec2,
    pub kind: PointKind,
    pub source: PointSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Minimum distance between vegetation points, meters.
    pub radius_r: f64,
    /// Candidates tried around an active point before it retires.
    pub max_attempts_k: u32,
    /// Arc-length gap between roadside points, meters.
    pub roadside_spacing_s: f64,
    /// Distance of the roadside curve from the road mask, meters.
    pub roadside_offset_d: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            radius_r: 8.0,
            max_attempts_k: 30,
            roadside_spacing_s: 25.0,
            roadside_offset_d: 3.0,
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn is_valid(&self) -> bool {
        self.radius_r > 0.0 && self.roadside_spacing_s > 0.0 && self.roadside_offset_d >= 0.0
    }
}
