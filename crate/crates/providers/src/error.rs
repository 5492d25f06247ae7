use thiserror::Error;

use crate::asset::RefineTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("incomplete design: missing {0} section")]
    IncompleteSpec(String),
    #[error("invalid provider output: {0}")]
    InvalidProviderOutput(String),
    #[error("refinement exhausted, best score {best_score:.4}")]
    RefineExhausted { best_score: f64, trace: RefineTrace },
    #[error("material {material_id} lacks a {map_kind} map")]
    MissingMap { material_id: String, map_kind: String },
    #[error("dangling reference {0}")]
    DanglingUri(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("library is empty")]
    EmptyLibrary,
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}
