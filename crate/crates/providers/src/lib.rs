//! Provider clients with offline fallbacks: scene design, layout/height
//! generation, shape-constrained asset generation and review, plus
//! asset/material/skybox library ingestion.

pub mod asset;
pub mod builtin;
pub mod config;
pub mod design;
pub mod error;
pub mod http;
pub mod layout_gen;
pub mod library;
pub mod mesh_io;
pub mod styles;

pub use asset::{
    constrained_refine_loop, providers_for, request_asset, AssetGenerator, AssetRequest, OfflineAssetGenerator,
    RefineOutcome, RefineStep, RefineTrace, ShapeJudge, SilhouetteIouJudge,
};
pub use builtin::builtin_libraries;
pub use config::{Endpoints, ProviderConfig, ProviderMode, PROVIDER_URL_ENV};
pub use design::{design_scene, offline_design, DesignSpec, LayoutParams};
pub use error::ProviderError;
pub use layout_gen::{generate_layout_pair, procedural_layout, LayoutPair};
pub use library::{
    ingest_libraries, ingest_library_dir, match_assets, pick_prop, write_library, AssetLibrary, AssetMatch,
    Libraries, LibraryAsset, MaterialLibrary, SkyboxEntry, SkyboxLibrary,
};
