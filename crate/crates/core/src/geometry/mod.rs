//! Mesh construction and geometric fitting.

mod extrude;
mod fit;
mod layer;
mod mesh;
mod obb;
mod sampling;
mod silhouette;
pub mod triangulate;

use thiserror::Error;

pub use extrude::{extrude_footprint, with_facade_uvs};
pub use fit::{fit_placement, fit_placement_to_obb, SimilarityPlacement};
pub use layer::triangulate_layer_mask;
pub use mesh::{Mesh, MIN_TRIANGLE_AREA};
pub use obb::{compute_obb, convex_hull, OrientedBox};
pub use sampling::{point_triangle_distance, sample_mesh_surface, PointCloud};
pub use silhouette::{
    iso_view_axes, render_iso_silhouette, silhouette_iou, IsoCamera, SilhouetteMask, ISO_AZIMUTH,
    ISO_ELEVATION,
};
pub use triangulate::triangulate_polygon;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("extrusion height must be positive")]
    ZeroHeight,
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("empty point set")]
    EmptyInput,
    #[error("asset bounds have a non-positive extent")]
    DegenerateAsset,
    #[error("oriented box or target height is degenerate")]
    DegenerateObb,
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("silhouette resolutions differ: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
}
