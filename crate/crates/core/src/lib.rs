//! Core scene compiler: layout analysis, placement sampling, geometry,
//! scene documents and the edit engine.

pub mod contour;
pub mod geometry;
pub mod grid;
pub mod layout;
pub mod math;
pub mod placement;
pub mod edit;
pub mod scene;
