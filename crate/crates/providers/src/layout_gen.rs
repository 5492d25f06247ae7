//! Layout/height pair generation: the seeded procedural generator used
//! offline and the external layout-diffusion client.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use majutsu_core::grid::Grid;
use majutsu_core::layout::{
    decode_height_image, decode_layout_image, repair_consistency, validate_consistency, HeightMap, LayoutMap,
    SemanticClass, ValidationReport, DEFAULT_MIN_BUILDING_HEIGHT,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{ProviderConfig, ProviderMode};
use crate::design::{seeded_rng, DesignSpec, LayoutParams};
use crate::error::ProviderError;
use crate::http::JsonClient;

pub const LAYOUT_SCHEMA: &str = "majutsu-layout/1";

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutPair {
    pub layout: LayoutMap,
    pub hmap: HeightMap,
    /// Violations found (and repaired) in the raw pair.
    pub repaired: ValidationReport,
}

/// Gap between neighbouring lots, in pixels; keeps buildings apart under
/// 8-connectivity.
const LOT_GAP: usize = 2;
const ROAD_SETBACK: usize = 2;

#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn w(&self) -> usize {
        self.x1 - self.x0
    }
    fn h(&self) -> usize {
        self.y1 - self.y0
    }
}

/// Road centre lines with jittered spacing; returns (start, width) pairs.
fn road_lines(n: usize, block: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut pos = rng.random_range(block / 3..block) as i64;
    let jitter = (block / 5).max(1) as i64;
    while (pos as usize) + 8 < n {
        let width = rng.random_range(4..=6);
        out.push((pos as usize, width));
        pos += block as i64 + rng.random_range(-jitter..=jitter);
    }
    out
}

fn gaps(lines: &[(usize, usize)], n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for &(p, w) in lines {
        if p > start {
            out.push((start, p));
        }
        start = (p + w).min(n);
    }
    if start < n {
        out.push((start, n));
    }
    out
}

fn split_lots(r: Rect, rng: &mut ChaCha8Rng, out: &mut Vec<Rect>) {
    const MAX_LOT: usize = 30;
    const MIN_LOT: usize = 8;
    let split_x = r.w() > MAX_LOT && (r.w() >= r.h() || r.h() <= MAX_LOT);
    let split_y = !split_x && r.h() > MAX_LOT;
    if split_x || split_y {
        let len = if split_x { r.w() } else { r.h() };
        let lo = MIN_LOT;
        let hi = len.saturating_sub(MIN_LOT + LOT_GAP);
        if hi > lo {
            let cut = rng.random_range(lo..=hi);
            let (a, b) = if split_x {
                (
                    Rect { x1: r.x0 + cut, ..r },
                    Rect { x0: r.x0 + cut + LOT_GAP, ..r },
                )
            } else {
                (
                    Rect { y1: r.y0 + cut, ..r },
                    Rect { y0: r.y0 + cut + LOT_GAP, ..r },
                )
            };
            split_lots(a, rng, out);
            split_lots(b, rng, out);
            return;
        }
    }
    if r.w() >= 3 && r.h() >= 3 {
        out.push(r);
    }
}

/// Smallest 16-bit height code whose decoded height is at least `h`, so
/// generated heights survive the PNG round trip unchanged.
fn quantize_height(h: f64, h_max: f64) -> f64 {
    let decode = |c: f64| c / 65535.0 * h_max;
    let mut code = (h / h_max * 65535.0).round().clamp(0.0, 65535.0);
    while decode(code) < h && code < 65535.0 {
        code += 1.0;
    }
    decode(code)
}

fn paint_river(cells: &mut Grid<SemanticClass>, rng: &mut ChaCha8Rng) {
    let n = cells.width();
    let vertical = rng.random_bool(0.5);
    let base = rng.random_range(n as f64 * 0.25..n as f64 * 0.75);
    let amp = rng.random_range(n as f64 * 0.03..n as f64 * 0.1);
    let period = rng.random_range(n as f64 * 0.6..n as f64 * 1.4);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let half = rng.random_range(6.0..11.0);
    for t in 0..n {
        let c = base + amp * (std::f64::consts::TAU * t as f64 / period + phase).sin();
        let lo = (c - half).floor().max(0.0) as usize;
        let hi = ((c + half).ceil() as usize).min(n - 1);
        for s in lo..=hi {
            let (x, y) = if vertical { (s, t) } else { (t, s) };
            cells.set(x, y, SemanticClass::Water);
        }
    }
}

fn paint_lake(cells: &mut Grid<SemanticClass>, rng: &mut ChaCha8Rng) {
    let n = cells.width() as f64;
    let cx = rng.random_range(n * 0.2..n * 0.8);
    let cy = rng.random_range(n * 0.2..n * 0.8);
    let r = rng.random_range(n * 0.06..n * 0.12);
    let harmonics: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.random_range(0.0..0.15), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let reach = (r * 1.5).ceil() as i64;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (x, y) = (cx as i64 + dx, cy as i64 + dy);
            if !cells.in_bounds(x, y) {
                continue;
            }
            let ang = (dy as f64).atan2(dx as f64);
            let wobble: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(k, (a, p))| a * ((k as f64 + 2.0) * ang + p).sin())
                .sum();
            if ((dx * dx + dy * dy) as f64).sqrt() <= r * (1.0 + wobble) {
                cells.set(x as usize, y as usize, SemanticClass::Water);
            }
        }
    }
}

fn rect_is(cells: &Grid<SemanticClass>, r: Rect, class: SemanticClass) -> bool {
    (r.y0..r.y1).all(|y| (r.x0..r.x1).all(|x| *cells.get(x, y) == class))
}

/// Seeded procedural pair: jittered road grid, a river or lake, park
/// blocks, and blocks subdivided into lots that are built on with
/// probability `density`. The result always passes the consistency check
/// and contains every semantic class.
pub fn procedural_layout(params: &LayoutParams, size: usize, meters_per_pixel: f64, h_max: f64, seed: u64) -> LayoutPair {
    let size = size.max(64);
    let mut rng = seeded_rng(&[b"layout", format!("{params:?}").as_bytes()], seed);
    let mut cells = Grid::new(size, size, SemanticClass::Ground);

    let block = params.block_px.clamp(32, size / 2);
    let cols = road_lines(size, block, &mut rng);
    let rows = road_lines(size, block, &mut rng);
    let paint_roads = |cells: &mut Grid<SemanticClass>, skip_water: bool| {
        for &(x, w) in &cols {
            for y in 0..size {
                for xx in x..(x + w).min(size) {
                    if !(skip_water && *cells.get(xx, y) == SemanticClass::Water) {
                        cells.set(xx, y, SemanticClass::Road);
                    }
                }
            }
        }
        for &(y, w) in &rows {
            for yy in y..(y + w).min(size) {
                for x in 0..size {
                    if !(skip_water && *cells.get(x, yy) == SemanticClass::Water) {
                        cells.set(x, yy, SemanticClass::Road);
                    }
                }
            }
        }
    };
    if params.river {
        // Roads cross the river on bridges.
        paint_river(&mut cells, &mut rng);
        paint_roads(&mut cells, false);
    } else {
        paint_lake(&mut cells, &mut rng);
        paint_roads(&mut cells, true);
    }

    let mut blocks = Vec::new();
    for &(y0, y1) in &gaps(&rows, size) {
        for &(x0, x1) in &gaps(&cols, size) {
            let r = Rect {
                x0: (x0 + ROAD_SETBACK).min(x1),
                y0: (y0 + ROAD_SETBACK).min(y1),
                x1: x1.saturating_sub(ROAD_SETBACK).max(x0),
                y1: y1.saturating_sub(ROAD_SETBACK).max(y0),
            };
            if r.w() >= 6 && r.h() >= 6 {
                blocks.push(r);
            }
        }
    }
    let parks = params.parks.clamp(1, blocks.len().saturating_sub(1).max(1));
    let mut park_ids: Vec<usize> = Vec::new();
    while park_ids.len() < parks.min(blocks.len()) {
        let i = rng.random_range(0..blocks.len());
        if !park_ids.contains(&i) {
            park_ids.push(i);
        }
    }

    let (lo, hi) = (
        params.heights.0.max(DEFAULT_MIN_BUILDING_HEIGHT).min(h_max),
        params.heights.1.max(DEFAULT_MIN_BUILDING_HEIGHT).min(h_max),
    );
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut heights = Grid::new(size, size, 0.0f64);
    let mut built = 0usize;
    let mut candidate_lot = None;
    for (bi, b) in blocks.iter().enumerate() {
        if park_ids.contains(&bi) {
            for y in b.y0..b.y1 {
                for x in b.x0..b.x1 {
                    if *cells.get(x, y) == SemanticClass::Ground {
                        cells.set(x, y, SemanticClass::Vegetation);
                    }
                }
            }
            continue;
        }
        let mut lots = Vec::new();
        split_lots(*b, &mut rng, &mut lots);
        for lot in lots {
            if !rect_is(&cells, lot, SemanticClass::Ground) {
                continue;
            }
            let roll: f64 = rng.random();
            if roll < params.density {
                let t: f64 = rng.random::<f64>().powi(2);
                let h = quantize_height(lo + (hi - lo) * t, h_max);
                // Some lots lose a corner quadrant to give L-shaped footprints.
                let notch = (lot.w() >= 10 && lot.h() >= 10 && rng.random_bool(0.25)).then(|| Rect {
                    x0: lot.x0 + lot.w() / 2,
                    y0: lot.y0 + lot.h() / 2,
                    x1: lot.x1,
                    y1: lot.y1,
                });
                for y in lot.y0..lot.y1 {
                    for x in lot.x0..lot.x1 {
                        if notch.is_some_and(|n| x >= n.x0 && y >= n.y0) {
                            continue;
                        }
                        cells.set(x, y, SemanticClass::Building);
                        heights.set(x, y, h);
                    }
                }
                built += 1;
            } else {
                candidate_lot.get_or_insert(lot);
                if roll > 1.0 - (1.0 - params.density) * 0.3 {
                    for y in lot.y0..lot.y1 {
                        for x in lot.x0..lot.x1 {
                            cells.set(x, y, SemanticClass::Vegetation);
                        }
                    }
                }
            }
        }
    }
    if built == 0 {
        if let Some(lot) = candidate_lot {
            let h = quantize_height(lo, h_max);
            for y in lot.y0..lot.y1 {
                for x in lot.x0..lot.x1 {
                    cells.set(x, y, SemanticClass::Building);
                    heights.set(x, y, h);
                }
            }
        }
    }

    let layout = LayoutMap::new(cells, meters_per_pixel).expect("nonempty grid");
    let hmap = HeightMap::new(heights, h_max).expect("finite nonnegative heights");
    let repaired = validate_consistency(&layout, &hmap, DEFAULT_MIN_BUILDING_HEIGHT).expect("same dimensions");
    debug_assert!(repaired.is_valid());
    LayoutPair { layout, hmap, repaired }
}

fn decode_png_field(reply: &serde_json::Value, keys: &[&str]) -> Result<Vec<u8>, ProviderError> {
    let s = keys
        .iter()
        .find_map(|k| reply.get(*k).and_then(|v| v.as_str()))
        .ok_or_else(|| ProviderError::InvalidProviderOutput(format!("missing {}", keys[0])))?;
    B64.decode(s.trim())
        .map_err(|e| ProviderError::InvalidProviderOutput(format!("{}: {e}", keys[0])))
}

/// Decodes an external reply, checks its size and repairs consistency.
pub fn parse_layout_reply(reply: &serde_json::Value, cfg: &ProviderConfig) -> Result<LayoutPair, ProviderError> {
    let layout_png = decode_png_field(reply, &["layout_png", "layout"])?;
    let height_png = decode_png_field(reply, &["height_png", "height"])?;
    let h_max = reply.get("h_max").and_then(|v| v.as_f64()).unwrap_or(cfg.h_max);
    let mut layout =
        decode_layout_image(&layout_png).map_err(|e| ProviderError::InvalidProviderOutput(format!("layout: {e}")))?;
    layout.meters_per_pixel = cfg.meters_per_pixel;
    let hmap = decode_height_image(&height_png, h_max)
        .map_err(|e| ProviderError::InvalidProviderOutput(format!("height: {e}")))?;
    let n = cfg.map_size;
    if layout.width() != n || layout.height() != n || hmap.width() != n || hmap.height() != n {
        return Err(ProviderError::InvalidProviderOutput("size".into()));
    }
    let (hmap, repaired) = repair_consistency(&layout, &hmap, DEFAULT_MIN_BUILDING_HEIGHT)
        .map_err(|e| ProviderError::InvalidProviderOutput(e.to_string()))?;
    Ok(LayoutPair { layout, hmap, repaired })
}

pub fn generate_layout_pair(spec: &DesignSpec, cfg: &ProviderConfig) -> Result<LayoutPair, ProviderError> {
    spec.validate()?;
    match cfg.mode {
        ProviderMode::Offline => {
            let params = LayoutParams::from_text(&spec.layout_text, cfg.seed);
            Ok(procedural_layout(&params, cfg.map_size, cfg.meters_per_pixel, cfg.h_max, cfg.seed))
        }
        ProviderMode::External => {
            let url = cfg.endpoint("layout")?;
            let reply = JsonClient::new(cfg)?.post(
                &url,
                &json!({
                    "schema": LAYOUT_SCHEMA,
                    "layout_text": spec.layout_text,
                    "seed": cfg.seed,
                    "cfg_scale": cfg.cfg_scale,
                    "steps": cfg.steps,
                    "width": cfg.map_size,
                    "height": cfg.map_size,
                    "h_max": cfg.h_max,
                }),
            )?;
            parse_layout_reply(&reply, cfg)
        }
    }
}
