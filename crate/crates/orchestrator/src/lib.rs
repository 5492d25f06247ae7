//! Pipeline driver and local HTTP service for scene sessions and judging.

pub mod api;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod session;

pub use api::{router, serve_api, serve_listener, AppState, StudyStore};
pub use config::{AssetSource, ConfigFormat, PipelineConfig, PipelineInput, DEFAULT_FAN_OUT, DEFAULT_PROMPT};
pub use error::{PipelineError, Stage};
pub use pipeline::{
    build_scene, export_checked, load_libraries, run_pipeline, write_scene_textures, AssetOrigin, Counts,
    InstanceAsset, PipelineReport, SceneBuild, ARTIFACTS,
};
pub use session::{CommandOutcome, Event, Mutation, Session, SessionError, SessionStore};
