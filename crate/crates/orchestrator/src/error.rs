use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Pipeline stage an error came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Libraries,
    Design,
    Layout,
    Instances,
    Assets,
    Placement,
    Materials,
    Assembly,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Libraries => "libraries",
            Stage::Design => "design",
            Stage::Layout => "layout",
            Stage::Instances => "instances",
            Stage::Assets => "assets",
            Stage::Placement => "placement",
            Stage::Materials => "materials",
            Stage::Assembly => "assembly",
            Stage::Export => "export",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} stage: {message}")]
    Stage { stage: Stage, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl PipelineError {
    pub fn stage(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            message: e.to_string(),
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
