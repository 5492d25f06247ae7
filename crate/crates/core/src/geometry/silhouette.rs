use serde::{Deserialize, Serialize};

use super::{GeometryError, Mesh};
use crate::grid::Mask;
use crate::math::Vec3;

pub const ISO_AZIMUTH: f64 = std::f64::consts::FRAC_PI_4;
/// atan(1/√2), the classic isometric elevation (≈ 35.264°).
pub const ISO_ELEVATION: f64 = 0.615_479_708_670_387_3;

const MARGIN: f64 = 0.05;

/// Screen axes of the isometric camera: `right` and `up` span the image
/// plane, the camera looks along `-view`.
pub fn iso_view_axes() -> (Vec3, Vec3, Vec3) {
    let (sa, ca) = ISO_AZIMUTH.sin_cos();
    let (se, ce) = ISO_ELEVATION.sin_cos();
    let view = Vec3::new(ce * ca, ce * sa, se);
    let right = Vec3::new(-sa, ca, 0.0);
    let up = view.cross(right);
    (right, up, view)
}

/// Orthographic isometric camera fitted to a mesh: projected bounds are
/// centred and scaled so the larger side spans 90% of the image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoCamera {
    pub resolution: usize,
    pub center: [f64; 2],
    /// Pixels per meter.
    pub scale: f64,
}

impl IsoCamera {
    pub fn fit(mesh: &Mesh, resolution: usize) -> Self {
        let (right, up, _) = iso_view_axes();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for t in &mesh.triangles {
            for &i in t {
                let p = mesh.vertices[i as usize];
                let s = [p.dot(right), p.dot(up)];
                for k in 0..2 {
                    lo[k] = lo[k].min(s[k]);
                    hi[k] = hi[k].max(s[k]);
                }
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let scale = if span > 0.0 {
            resolution as f64 * (1.0 - 2.0 * MARGIN) / span
        } else {
            1.0
        };
        IsoCamera {
            resolution,
            center: [(lo[0] + hi[0]) * 0.5, (lo[1] + hi[1]) * 0.5],
            scale,
        }
    }

    /// Continuous image coordinates (column, row) with rows growing down;
    /// pixel `(i, j)` has its centre at `(i + 0.5, j + 0.5)`.
    pub fn project(&self, p: Vec3) -> (f64, f64) {
        let (right, up, _) = iso_view_axes();
        let half = self.resolution as f64 * 0.5;
        (
            (p.dot(right) - self.center[0]) * self.scale + half,
            (self.center[1] - p.dot(up)) * self.scale + half,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SilhouetteMask {
    pub resolution: usize,
    pub bits: Mask,
    pub camera: IsoCamera,
}

impl SilhouetteMask {
    pub fn filled(&self) -> usize {
        self.bits.count()
    }
}

fn orient(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Binary orthographic rasterisation from the fixed isometric camera. A
/// pixel is set when its centre lies inside or on the edge of any
/// projected triangle; triangles seen exactly edge-on are skipped.
pub fn render_iso_silhouette(mesh: &Mesh, resolution: usize) -> Result<SilhouetteMask, GeometryError> {
    if mesh.triangles.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let camera = IsoCamera::fit(mesh, resolution);
    let mut bits = Mask::new(resolution, resolution, false);
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| camera.project(mesh.vertices[i as usize]));
        if orient(a, b, c).abs() < 1e-12 {
            continue;
        }
        let x0 = (a.0.min(b.0).min(c.0) - 0.5).ceil().max(0.0) as usize;
        let y0 = (a.1.min(b.1).min(c.1) - 0.5).ceil().max(0.0) as usize;
        let x1 = (a.0.max(b.0).max(c.0) - 0.5).floor();
        let y1 = (a.1.max(b.1).max(c.1) - 0.5).floor();
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        let x1 = (x1 as usize).min(resolution.saturating_sub(1));
        let y1 = (y1 as usize).min(resolution.saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                if *bits.get(x, y) {
                    continue;
                }
                let p = (x as f64 + 0.5, y as f64 + 0.5);
                let w0 = orient(b, c, p);
                let w1 = orient(c, a, p);
                let w2 = orient(a, b, p);
                if (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0) || (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0) {
                    bits.set(x, y, true);
                }
            }
        }
    }
    Ok(SilhouetteMask {
        resolution,
        bits,
        camera,
    })
}

/// Intersection over union of two equally sized masks; two empty masks
/// agree perfectly.
pub fn silhouette_iou(a: &SilhouetteMask, b: &SilhouetteMask) -> Result<f64, GeometryError> {
    if a.resolution != b.resolution {
        return Err(GeometryError::ResolutionMismatch(a.resolution, b.resolution));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.bits.data().iter().zip(b.bits.data()) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}
