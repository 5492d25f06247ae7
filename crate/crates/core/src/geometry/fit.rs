use serde::{Deserialize, Serialize};

use super::{GeometryError, OrientedBox};
use crate::layout::BuildingInstance;
use crate::math::{Aabb, Vec2, Vec3};

/// Maps asset-local coordinates into the map frame: uniform scale in the
/// ground plane, independent vertical scale, rotation about +z, then
/// translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPlacement {
    pub translation: Vec3,
    pub yaw: f64,
    pub xy_scale: f64,
    pub z_scale: f64,
}

impl SimilarityPlacement {
    pub fn at(position: Vec2, yaw: f64) -> Self {
        SimilarityPlacement {
            translation: position.extend(0.0),
            yaw,
            xy_scale: 1.0,
            z_scale: 1.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        let t = self.translation;
        [t.x, t.y, t.z, self.yaw].iter().all(|v| v.is_finite())
            && self.xy_scale.is_finite()
            && self.z_scale.is_finite()
            && self.xy_scale > 0.0
            && self.z_scale > 0.0
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let q = (p.xy() * self.xy_scale).rotated(self.yaw);
        Vec3::new(
            q.x + self.translation.x,
            q.y + self.translation.y,
            p.z * self.z_scale + self.translation.z,
        )
    }

    /// World-space box of a transformed local box.
    pub fn transform_aabb(&self, b: &Aabb) -> Aabb {
        Aabb::from_points(b.corners().into_iter().map(|c| self.apply(c))).expect("eight corners")
    }
}

/// Fits an asset's local bounding box into an oriented footprint box:
/// the asset's x axis follows `obb.yaw`, the planar scale is the largest
/// that keeps the asset inside the box, and the vertical scale matches
/// `target_height` exactly. The asset's base centre lands on the box
/// centre at z = 0.
pub fn fit_placement_to_obb(
    asset_bounds: &Aabb,
    obb: &OrientedBox,
    target_height: f64,
) -> Result<SimilarityPlacement, GeometryError> {
    let size = asset_bounds.size();
    if !(size.x > 0.0 && size.y > 0.0 && size.z > 0.0) || ![size.x, size.y, size.z].iter().all(|v| v.is_finite()) {
        return Err(GeometryError::DegenerateAsset);
    }
    if !(obb.half_w > 0.0 && obb.half_l > 0.0 && target_height > 0.0) || !target_height.is_finite() {
        return Err(GeometryError::DegenerateObb);
    }
    let xy_scale = (2.0 * obb.half_w / size.x).min(2.0 * obb.half_l / size.y);
    let z_scale = target_height / size.z;
    let base = asset_bounds.center().xy();
    let offset = (base * xy_scale).rotated(obb.yaw);
    Ok(SimilarityPlacement {
        translation: Vec3::new(
            obb.center.x - offset.x,
            obb.center.y - offset.y,
            -z_scale * asset_bounds.min.z,
        ),
        yaw: obb.yaw,
        xy_scale,
        z_scale,
    })
}

pub fn fit_placement(asset_bounds: &Aabb, instance: &BuildingInstance) -> Result<SimilarityPlacement, GeometryError> {
    fit_placement_to_obb(asset_bounds, &instance.obb, instance.target_height)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> Aabb {
        Aabb {
            min: Vec3::ZERO,
            max: Vec3::new(1.0, 1.0, 1.0),
        }
    }

    #[test]
    fn unit_cube_into_box() {
        let obb = OrientedBox {
            center: Vec2::new(50.0, 60.0),
            yaw: 0.5,
            half_w: 5.0,
            half_l: 10.0,
        };
        let p = fit_placement_to_obb(&unit_cube(), &obb, 30.0).unwrap();
        assert_eq!((p.xy_scale, p.z_scale, p.yaw), (10.0, 30.0, 0.5));
        let world = p.transform_aabb(&unit_cube());
        assert!(world.min.z.abs() < 1e-12 && (world.max.z - 30.0).abs() < 1e-12);
        let base_center = p.apply(Vec3::new(0.5, 0.5, 0.0));
        assert!((base_center.xy() - obb.center).length() < 1e-12);
        for c in unit_cube().corners() {
            assert!(obb.contains(p.apply(c).xy(), 1e-6));
        }
    }

    #[test]
    fn identity_when_bounds_match() {
        let obb = OrientedBox {
            center: Vec2::ZERO,
            yaw: 0.0,
            half_w: 4.0,
            half_l: 3.0,
        };
        let bounds = Aabb {
            min: Vec3::new(-4.0, -3.0, 0.0),
            max: Vec3::new(4.0, 3.0, 12.0),
        };
        let p = fit_placement_to_obb(&bounds, &obb, 12.0).unwrap();
        assert_eq!((p.xy_scale, p.z_scale), (1.0, 1.0));
        assert_eq!(p.translation, Vec3::ZERO);
    }

    #[test]
    fn degenerate_inputs() {
        let flat = OrientedBox {
            center: Vec2::ZERO,
            yaw: 0.0,
            half_w: 0.0,
            half_l: 3.0,
        };
        assert_eq!(fit_placement_to_obb(&unit_cube(), &flat, 5.0), Err(GeometryError::DegenerateObb));
        let thin = Aabb {
            min: Vec3::ZERO,
            max: Vec3::new(1.0, 0.0, 1.0),
        };
        let obb = OrientedBox { half_w: 1.0, ..flat };
        assert_eq!(fit_placement_to_obb(&thin, &obb, 5.0), Err(GeometryError::DegenerateAsset));
    }
}
