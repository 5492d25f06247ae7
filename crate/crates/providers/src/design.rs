//! Scene design templates: four free-text sections plus a library style.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::builtin::SKYBOXES;
use crate::config::{ProviderConfig, ProviderMode};
use crate::error::ProviderError;
use crate::http::JsonClient;
use crate::styles::{match_style, style, tokens, STYLES};

pub const DESIGN_SCHEMA: &str = "majutsu-design/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub layout_text: String,
    pub assets_design: String,
    pub materials_design: String,
    pub skymap_design: String,
    pub style_tag: String,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<(), ProviderError> {
        for (name, text) in [
            ("layout", &self.layout_text),
            ("assets", &self.assets_design),
            ("materials", &self.materials_design),
            ("skymap", &self.skymap_design),
        ] {
            if text.trim().is_empty() {
                return Err(ProviderError::IncompleteSpec(name.into()));
            }
        }
        if style(&self.style_tag).is_none() {
            return Err(ProviderError::InvalidProviderOutput(format!("unknown style {:?}", self.style_tag)));
        }
        Ok(())
    }

    /// Material id requested for a layer in `materials_design`
    /// (`"<layer>: <id>"` clauses separated by `;`).
    pub fn layer_material(&self, layer: &str) -> Option<String> {
        self.materials_design.split(';').find_map(|clause| {
            let (k, v) = clause.split_once(':')?;
            (k.trim().eq_ignore_ascii_case(layer)).then(|| v.trim().to_string())
        })
    }

    /// Skybox id named at the start of `skymap_design`, if any.
    pub fn skybox_id(&self) -> Option<String> {
        let head = self.skymap_design.split(':').next()?.trim();
        (!head.is_empty() && !head.contains(' ')).then(|| head.to_string())
    }
}

pub(crate) fn seeded_rng(parts: &[&[u8]], seed: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

const RIVER_WORDS: &[&str] = &["river", "riverside", "canal", "canals", "stream", "delta"];
const LAKE_WORDS: &[&str] = &[
    "lake", "lakeside", "pond", "bay", "harbor", "harbour", "coast", "coastal", "seaside", "beach", "port", "docks",
    "fjord",
];
const SMALL_WORDS: &[&str] = &["small", "village", "town", "hamlet", "quiet", "rural", "suburb", "suburban"];
const LARGE_WORDS: &[&str] = &["downtown", "city", "metropolis", "megacity", "dense", "urban", "skyline"];
const GREEN_WORDS: &[&str] = &["green", "park", "parks", "garden", "gardens", "forest", "leafy"];

fn any_word(words: &[String], set: &[&str]) -> bool {
    words.iter().any(|w| set.contains(&w.as_str()))
}

fn pick_skybox(words: &[String], rng: &mut ChaCha8Rng) -> usize {
    for (i, sky) in SKYBOXES.iter().enumerate() {
        if sky.tags.iter().any(|t| words.iter().any(|w| w == t)) {
            return i;
        }
    }
    rng.random_range(0..SKYBOXES.len())
}

/// Deterministic template fill keyed by (prompt, seed).
pub fn offline_design(prompt: &str, seed: u64) -> DesignSpec {
    let prompt = prompt.trim();
    let mut rng = seeded_rng(&[b"design", prompt.as_bytes()], seed);
    let words = tokens(prompt);
    let style_name = match_style(prompt).unwrap_or_else(|| STYLES[rng.random_range(0..STYLES.len())].name);
    let st = style(style_name).expect("matched style exists");

    let water = if any_word(&words, RIVER_WORDS) {
        "river"
    } else if any_word(&words, LAKE_WORDS) {
        "lake"
    } else if rng.random_bool(0.5) {
        "lake"
    } else {
        "river"
    };
    let (density, heights) = if any_word(&words, SMALL_WORDS) {
        (rng.random_range(0.35..0.5), (st.heights.0, st.heights.1.min(20.0).max(st.heights.0 + 4.0)))
    } else if any_word(&words, LARGE_WORDS) {
        (rng.random_range(0.65..0.8), st.heights)
    } else {
        (rng.random_range(0.45..0.65), st.heights)
    };
    let parks = if any_word(&words, GREEN_WORDS) {
        rng.random_range(3..=5)
    } else {
        rng.random_range(1..=3)
    };
    let block = rng.random_range(56..=88);
    let sky = &SKYBOXES[pick_skybox(&words, &mut rng)];

    DesignSpec {
        layout_text: format!(
            "{prompt}. Road network: jittered grid with block size {block} px. Building density: {density:.2}. \
             Water: {water}. Parks: {parks}. Building heights: {:.0}-{:.0} m.",
            heights.0, heights.1
        ),
        assets_design: format!(
            "{} style buildings ({}). Facades in {} and {}. Street trees and streetlights in the same style.",
            st.name,
            st.tags.join(", "),
            st.facade_materials[0],
            st.facade_materials[1]
        ),
        materials_design: format!(
            "ground: {}; road: {}; water: water_calm; vegetation: lawn",
            st.ground_material, st.road_material
        ),
        skymap_design: format!("{}: {}", sky.id, sky.description),
        style_tag: st.name.to_string(),
    }
}

fn section(obj: &Value, keys: &[&str]) -> String {
    keys.iter()
        .find_map(|k| obj.get(*k).and_then(Value::as_str))
        .unwrap_or_default()
        .to_string()
}

/// Validates an external designer reply (`{"design": {...}}` or the
/// sections at top level).
pub fn parse_design_reply(prompt: &str, reply: &Value) -> Result<DesignSpec, ProviderError> {
    let obj = reply.get("design").unwrap_or(reply);
    if !obj.is_object() {
        return Err(ProviderError::InvalidProviderOutput("design reply is not an object".into()));
    }
    let mut spec = DesignSpec {
        layout_text: section(obj, &["layout", "layout_text"]),
        assets_design: section(obj, &["assets", "assets_design"]),
        materials_design: section(obj, &["materials", "materials_design"]),
        skymap_design: section(obj, &["skymap", "skymap_design"]),
        style_tag: section(obj, &["style_tag", "style"]),
    };
    if style(&spec.style_tag).is_none() {
        let text = format!("{prompt} {}", spec.assets_design);
        spec.style_tag = match_style(&text).unwrap_or(STYLES[0].name).to_string();
    }
    spec.validate()?;
    Ok(spec)
}

pub fn design_scene(prompt: &str, cfg: &ProviderConfig) -> Result<DesignSpec, ProviderError> {
    if prompt.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("empty prompt".into()));
    }
    match cfg.mode {
        ProviderMode::Offline => Ok(offline_design(prompt, cfg.seed)),
        ProviderMode::External => {
            let url = cfg.endpoint("design")?;
            let reply = JsonClient::new(cfg)?.post(
                &url,
                &json!({ "schema": DESIGN_SCHEMA, "prompt": prompt, "seed": cfg.seed }),
            )?;
            parse_design_reply(prompt, &reply)
        }
    }
}

/// Layout-generator parameters recovered from `layout_text`; anything not
/// stated is drawn from the seeded stream.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutParams {
    pub block_px: usize,
    pub density: f64,
    pub river: bool,
    pub parks: usize,
    pub heights: (f64, f64),
}

fn number_after(text: &str, key: &str) -> Option<f64> {
    let at = text.find(key)? + key.len();
    let rest = text[at..].trim_start();
    let end = rest
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(rest.len());
    rest[..end].trim_end_matches('.').parse().ok()
}

impl LayoutParams {
    pub fn from_text(text: &str, seed: u64) -> Self {
        let lower = text.to_lowercase();
        let mut rng = seeded_rng(&[b"layout-params", lower.as_bytes()], seed);
        let words = tokens(&lower);
        let block_px = number_after(&lower, "block size")
            .map(|v| v as usize)
            .unwrap_or_else(|| rng.random_range(56..=88))
            .clamp(32, 160);
        let density = number_after(&lower, "density:")
            .unwrap_or_else(|| rng.random_range(0.45..0.65))
            .clamp(0.1, 0.95);
        let river = match lower.find("water:").map(|i| lower[i + 6..].trim_start().to_string()) {
            Some(w) if w.starts_with("river") => true,
            Some(w) if w.starts_with("lake") => false,
            _ => any_word(&words, RIVER_WORDS) || (!any_word(&words, LAKE_WORDS) && rng.random_bool(0.5)),
        };
        let parks = number_after(&lower, "parks:")
            .map(|v| v as usize)
            .unwrap_or_else(|| rng.random_range(1..=3))
            .clamp(1, 12);
        let heights = lower
            .find("heights:")
            .and_then(|i| {
                let rest = &lower[i + 8..];
                let lo = number_after(rest, "")?;
                let dash = rest.find('-')?;
                let hi = number_after(&rest[dash + 1..], "")?;
                Some((lo, hi))
            })
            .filter(|(lo, hi)| lo <= hi)
            .unwrap_or((6.0, 40.0));
        LayoutParams {
            block_px,
            density,
            river,
            parks,
            heights,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offline_design_is_deterministic_and_complete() {
        let a = offline_design("small riverside town", 7);
        assert_eq!(a, offline_design("small riverside town", 7));
        a.validate().unwrap();
        assert_eq!(a.style_tag, "colonial");
        let p = LayoutParams::from_text(&a.layout_text, 7);
        assert!(p.river);
        assert!(p.heights.1 <= 20.0);
        assert_ne!(offline_design("small riverside town", 8), a);
    }

    #[test]
    fn cyberpunk_prompt_resolves_style() {
        assert_eq!(offline_design("cyberpunk downtown", 1).style_tag, "cyberpunk");
    }

    #[test]
    fn missing_skymap_is_reported() {
        let reply = json!({ "design": { "layout": "grid", "assets": "towers", "materials": "road: asphalt_01" } });
        assert_eq!(
            parse_design_reply("x", &reply),
            Err(ProviderError::IncompleteSpec("skymap".into()))
        );
    }

    #[test]
    fn layer_material_and_skybox_lookup() {
        let d = offline_design("gothic old town at night", 3);
        assert_eq!(d.layer_material("road").as_deref(), Some("cobblestone"));
        assert_eq!(d.layer_material("water").as_deref(), Some("water_calm"));
        assert_eq!(d.skybox_id().as_deref(), Some("night_city"));
    }

    #[test]
    fn params_parse_from_text() {
        let p = LayoutParams::from_text(
            "x. Road network: jittered grid with block size 70 px. Building density: 0.55. Water: lake. Parks: 4. Building heights: 9-30 m.",
            0,
        );
        assert_eq!(p, LayoutParams { block_px: 70, density: 0.55, river: false, parks: 4, heights: (9.0, 30.0) });
    }
}
