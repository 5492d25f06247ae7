//! Pipeline configuration and config-file loading.

use std::path::{Path, PathBuf};

use majutsu_core::placement::SamplingConfig;
use majutsu_providers::{ProviderConfig, ProviderMode};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// Where building meshes come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetSource {
    /// One asset per instance from the generator, gated by the refine loop.
    #[default]
    Generate,
    /// Retrieval from the asset library by style and footprint aspect.
    Library,
}

/// Default bound on concurrent provider calls during asset generation.
pub const DEFAULT_FAN_OUT: usize = 8;

/// Prompt used by `run` when neither a prompt nor a layout is given.
pub const DEFAULT_PROMPT: &str = "small riverside town";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub name: Option<String>,
    pub prompt: Option<String>,
    pub layout_path: Option<PathBuf>,
    pub height_path: Option<PathBuf>,
    /// Design prompt for layout-file input; the layout itself is not
    /// regenerated. Defaults to the generic "city".
    pub style_hint: Option<String>,
    pub seed: u64,
    pub provider: ProviderConfig,
    pub sampling: SamplingConfig,
    /// Library directories or manifest files; empty means the built-in set.
    pub libs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub asset_source: AssetSource,
    pub fan_out: usize,
    pub export_glb: bool,
    /// Copy or synthesise the texture and skybox files referenced by the
    /// scene next to the exported artifacts.
    pub write_textures: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            name: None,
            prompt: None,
            layout_path: None,
            height_path: None,
            style_hint: None,
            seed: 0,
            provider: ProviderConfig::default(),
            sampling: SamplingConfig::default(),
            libs: Vec::new(),
            out_dir: PathBuf::from("out"),
            asset_source: AssetSource::default(),
            fan_out: DEFAULT_FAN_OUT,
            export_glb: true,
            write_textures: true,
        }
    }
}

/// Scene input after validation.
#[derive(Clone, Debug, PartialEq)]
pub enum PipelineInput<'a> {
    Prompt(&'a str),
    Layout { layout: &'a Path, height: &'a Path },
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

impl PipelineConfig {
    /// Rejects a prompt together with layout files, and half a layout pair.
    pub fn check_input(&self) -> Result<(), PipelineError> {
        let has_layout = self.layout_path.is_some() || self.height_path.is_some();
        if self.prompt.is_some() && has_layout {
            return Err(config_err("give either a prompt or layout and height paths, not both"));
        }
        if self.layout_path.is_some() != self.height_path.is_some() {
            return Err(config_err("layout and height paths must be given together"));
        }
        Ok(())
    }

    pub fn input(&self) -> Result<PipelineInput<'_>, PipelineError> {
        self.check_input()?;
        match (&self.prompt, &self.layout_path, &self.height_path) {
            (Some(p), None, None) if !p.trim().is_empty() => Ok(PipelineInput::Prompt(p)),
            (Some(_), None, None) => Err(config_err("prompt is empty")),
            (None, Some(l), Some(h)) => Ok(PipelineInput::Layout { layout: l, height: h }),
            _ => Err(config_err("no input: give a prompt or layout and height paths")),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.input()?;
        if self.fan_out == 0 {
            return Err(config_err("fan_out must be at least 1"));
        }
        if !self.sampling.is_valid() {
            return Err(config_err("invalid sampling parameters"));
        }
        self.effective_provider().validate().map_err(|e| config_err(e.to_string()))
    }

    /// Provider settings with the run seed applied.
    pub fn effective_provider(&self) -> ProviderConfig {
        ProviderConfig {
            seed: self.seed,
            ..self.provider.clone()
        }
    }

    pub fn effective_sampling(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.seed,
            ..self.sampling
        }
    }

    pub fn scene_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match (&self.prompt, &self.layout_path) {
            (Some(p), _) => p.trim().to_string(),
            (None, Some(l)) => l.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            _ => "scene".into(),
        }
    }

    /// Parses TOML or JSON text and checks the input exclusivity.
    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = match format {
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| config_err(e.to_string()))?,
            ConfigFormat::Json => serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?,
        };
        cfg.check_input()?;
        Ok(cfg)
    }

    /// Loads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let format = ConfigFormat::from_path(path)?;
        let mut cfg = Self::parse(&text, format)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.layout_path.as_mut().map(fix);
        cfg.height_path.as_mut().map(fix);
        cfg.libs.iter_mut().for_each(fix);
        Ok(cfg)
    }

    /// Offline unless the config asks for external providers or the
    /// provider URL variable is set; `force_offline` always wins.
    pub fn resolve_mode(&mut self, force_offline: bool) {
        self.provider = self.provider.clone().with_env();
        if force_offline {
            self.provider.mode = ProviderMode::Offline;
        } else if std::env::var(majutsu_providers::PROVIDER_URL_ENV).is_ok_and(|v| !v.is_empty()) {
            self.provider.mode = ProviderMode::External;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("toml") => Ok(ConfigFormat::Toml),
            Some("json") => Ok(ConfigFormat::Json),
            _ => Err(config_err(format!("{}: config must be .toml or .json", path.display()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusive_inputs() {
        let both = "prompt = \"a town\"\nlayout_path = \"l.png\"\nheight_path = \"h.png\"\n";
        assert!(matches!(PipelineConfig::parse(both, ConfigFormat::Toml), Err(PipelineError::Config(_))));
        let half = r#"{"layout_path": "l.png"}"#;
        assert!(PipelineConfig::parse(half, ConfigFormat::Json).is_err());
        let ok = PipelineConfig::parse("prompt = \"a town\"\nseed = 3\n[provider]\niou_threshold = 0.9\n", ConfigFormat::Toml)
            .unwrap();
        assert_eq!(ok.seed, 3);
        assert_eq!(ok.provider.iou_threshold, 0.9);
        assert_eq!(ok.effective_provider().seed, 3);
        ok.validate().unwrap();
        assert!(PipelineConfig::default().validate().is_err());
        assert!(PipelineConfig::parse("promt = \"x\"", ConfigFormat::Toml).is_err());
    }
}
