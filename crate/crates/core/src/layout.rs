//! Semantic layout maps and building height maps: decoding, validation,
//! instance extraction and footprint vectorisation.

use std::io::Cursor;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{label_components, rings_to_map, simplify_polygon, trace_rings};
use crate::geometry::{compute_obb, OrientedBox};
use crate::grid::{Grid, MapFrame, Mask};
use crate::math::{ring_signed_area, Vec2};

pub const DEFAULT_METERS_PER_PIXEL: f64 = 2.0;
pub const DEFAULT_H_MAX: f64 = 150.0;
pub const DEFAULT_MIN_BUILDING_HEIGHT: f64 = 3.0;
pub const DEFAULT_MAP_SIZE: usize = 512;
/// Components smaller than this are treated as rasterisation noise.
pub const MIN_INSTANCE_PIXELS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("pixel ({x}, {y}) has colour {rgb:?} which is not in the layout palette")]
    NonPaletteColor { x: usize, y: usize, rgb: [u8; 3] },
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("h_max must be a finite non-negative number, got {0}")]
    NegativeHMax(f64),
    #[error("dimension mismatch: layout {layout:?} vs height map {height:?}")]
    DimensionMismatch {
        layout: (usize, usize),
        height: (usize, usize),
    },
    #[error("invalid height {value} at ({x}, {y})")]
    InvalidHeight { x: usize, y: usize, value: f64 },
    #[error("map dimensions must be at least 1x1")]
    EmptyMap,
    #[error("mask is empty")]
    EmptyMask,
    #[error("mask has {0} 8-connected components, expected exactly one")]
    MultipleComponents(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum SemanticClass {
    #[default]
    Ground,
    Road,
    Water,
    Vegetation,
    Building,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 5] = [
        SemanticClass::Ground,
        SemanticClass::Road,
        SemanticClass::Water,
        SemanticClass::Vegetation,
        SemanticClass::Building,
    ];

    pub fn color(self) -> [u8; 3] {
        match self {
            SemanticClass::Ground => [200, 200, 200],
            SemanticClass::Road => [80, 80, 80],
            SemanticClass::Water => [60, 120, 220],
            SemanticClass::Vegetation => [60, 180, 75],
            SemanticClass::Building => [230, 90, 60],
        }
    }

    pub fn from_color(rgb: [u8; 3]) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.color() == rgb)
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Ground => "ground",
            SemanticClass::Road => "road",
            SemanticClass::Water => "water",
            SemanticClass::Vegetation => "vegetation",
            SemanticClass::Building => "building",
        }
    }
}

/// Machine-readable palette, as shipped in `docs/palette.json`.
pub fn palette_json() -> String {
    let map: serde_json::Map<String, serde_json::Value> = SemanticClass::ALL
        .iter()
        .map(|c| (c.name().to_string(), serde_json::json!(c.color())))
        .collect();
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))
        .expect("palette serialises");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutMap {
    cells: Grid<SemanticClass>,
    pub meters_per_pixel: f64,
}

impl LayoutMap {
    pub fn new(cells: Grid<SemanticClass>, meters_per_pixel: f64) -> Result<Self, LayoutError> {
        if cells.width() == 0 || cells.height() == 0 {
            return Err(LayoutError::EmptyMap);
        }
        Ok(Self {
            cells,
            meters_per_pixel,
        })
    }

    pub fn filled(width: usize, height: usize, class: SemanticClass) -> Self {
        Self {
            cells: Grid::new(width.max(1), height.max(1), class),
            meters_per_pixel: DEFAULT_METERS_PER_PIXEL,
        }
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn cells(&self) -> &Grid<SemanticClass> {
        &self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> SemanticClass {
        *self.cells.get(x, y)
    }

    pub fn set(&mut self, x: usize, y: usize, c: SemanticClass) {
        self.cells.set(x, y, c);
    }

    pub fn frame(&self) -> MapFrame {
        MapFrame::for_grid(&self.cells, self.meters_per_pixel)
    }

    pub fn mask(&self, class: SemanticClass) -> Mask {
        self.cells.map(|&c| c == class)
    }

    /// Pixel counts per class in `SemanticClass::ALL` order.
    pub fn histogram(&self) -> [usize; 5] {
        let mut h = [0usize; 5];
        for &c in self.cells.data() {
            h[c as usize] += 1;
        }
        h
    }

    pub fn class_count(&self, class: SemanticClass) -> usize {
        self.histogram()[class as usize]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeightMap {
    heights: Grid<f64>,
    pub h_max: f64,
}

impl HeightMap {
    pub fn new(heights: Grid<f64>, h_max: f64) -> Result<Self, LayoutError> {
        if !(h_max.is_finite() && h_max >= 0.0) {
            return Err(LayoutError::NegativeHMax(h_max));
        }
        if heights.width() == 0 || heights.height() == 0 {
            return Err(LayoutError::EmptyMap);
        }
        for y in 0..heights.height() {
            for x in 0..heights.width() {
                let v = *heights.get(x, y);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(LayoutError::InvalidHeight { x, y, value: v });
                }
            }
        }
        Ok(Self { heights, h_max })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            heights: Grid::new(width.max(1), height.max(1), 0.0),
            h_max: DEFAULT_H_MAX,
        }
    }

    pub fn width(&self) -> usize {
        self.heights.width()
    }

    pub fn height(&self) -> usize {
        self.heights.height()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        *self.heights.get(x, y)
    }

    /// Sets a height; negative or non-finite values are clamped to zero.
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.heights
            .set(x, y, if v.is_finite() { v.max(0.0) } else { 0.0 });
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.heights
    }
}

fn png_error(e: image::ImageError) -> LayoutError {
    LayoutError::CorruptImage(e.to_string())
}

pub fn decode_layout_image(image_bytes: &[u8]) -> Result<LayoutMap, LayoutError> {
    let img = image::load_from_memory_with_format(image_bytes, ImageFormat::Png).map_err(png_error)?;
    let rgb = match img {
        DynamicImage::ImageRgb8(b) => b,
        other => {
            return Err(LayoutError::CorruptImage(format!(
                "expected 8-bit RGB layout image, found {:?}",
                other.color()
            )))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut cells = Vec::with_capacity(w * h);
    for (x, y, px) in rgb.enumerate_pixels() {
        let class = SemanticClass::from_color(px.0).ok_or(LayoutError::NonPaletteColor {
            x: x as usize,
            y: y as usize,
            rgb: px.0,
        })?;
        cells.push(class);
    }
    let grid = Grid::from_vec(w, h, cells).ok_or(LayoutError::EmptyMap)?;
    LayoutMap::new(grid, DEFAULT_METERS_PER_PIXEL)
}

pub fn encode_layout_image(layout: &LayoutMap) -> Vec<u8> {
    let img = ImageBuffer::from_fn(layout.width() as u32, layout.height() as u32, |x, y| {
        Rgb(layout.get(x as usize, y as usize).color())
    });
    let mut out = Vec::new();
    DynamicImage::ImageRgb8(img)
        .write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out
}

/// Decodes an 8- or 16-bit grayscale PNG with the linear code → meters map
/// `h = code / max_code × h_max`.
pub fn decode_height_image(image_bytes: &[u8], h_max: f64) -> Result<HeightMap, LayoutError> {
    if !(h_max.is_finite() && h_max >= 0.0) {
        return Err(LayoutError::NegativeHMax(h_max));
    }
    let img = image::load_from_memory_with_format(image_bytes, ImageFormat::Png).map_err(png_error)?;
    let (w, h, heights): (usize, usize, Vec<f64>) = match img {
        DynamicImage::ImageLuma8(b) => (
            b.width() as usize,
            b.height() as usize,
            b.pixels().map(|p| p.0[0] as f64 / 255.0 * h_max).collect(),
        ),
        DynamicImage::ImageLuma16(b) => (
            b.width() as usize,
            b.height() as usize,
            b.pixels().map(|p| p.0[0] as f64 / 65535.0 * h_max).collect(),
        ),
        other => {
            return Err(LayoutError::CorruptImage(format!(
                "expected grayscale height image, found {:?}",
                other.color()
            )))
        }
    };
    HeightMap::new(Grid::from_vec(w, h, heights).ok_or(LayoutError::EmptyMap)?, h_max)
}

/// Encodes as 16-bit grayscale; heights above `h_max` saturate.
pub fn encode_height_image(hmap: &HeightMap) -> Vec<u8> {
    let scale = if hmap.h_max > 0.0 { 65535.0 / hmap.h_max } else { 0.0 };
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(hmap.width() as u32, hmap.height() as u32, |x, y| {
            let v = (hmap.get(x as usize, y as usize) * scale).round();
            Luma([v.clamp(0.0, 65535.0) as u16])
        });
    let mut out = Vec::new();
    DynamicImage::ImageLuma16(img)
        .write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out
}

/// Spatial-consistency violations between a layout and its height map.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Building pixels whose height is below the minimum building height.
    pub low_buildings: Vec<(usize, usize)>,
    /// Non-building pixels carrying a positive height.
    pub stray_heights: Vec<(usize, usize)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.low_buildings.is_empty() && self.stray_heights.is_empty()
    }
}

fn check_dims(layout: &LayoutMap, hmap: &HeightMap) -> Result<(), LayoutError> {
    if layout.width() != hmap.width() || layout.height() != hmap.height() {
        return Err(LayoutError::DimensionMismatch {
            layout: (layout.width(), layout.height()),
            height: (hmap.width(), hmap.height()),
        });
    }
    Ok(())
}

pub fn validate_consistency(
    layout: &LayoutMap,
    hmap: &HeightMap,
    min_height: f64,
) -> Result<ValidationReport, LayoutError> {
    check_dims(layout, hmap)?;
    let mut report = ValidationReport::default();
    for y in 0..layout.height() {
        for x in 0..layout.width() {
            let h = hmap.get(x, y);
            if layout.get(x, y) == SemanticClass::Building {
                if h < min_height {
                    report.low_buildings.push((x, y));
                }
            } else if h > 0.0 {
                report.stray_heights.push((x, y));
            }
        }
    }
    Ok(report)
}

/// Applies the repair policy: low building pixels are clamped up to
/// `min_height`, stray heights are zeroed. Returns the repaired map and the
/// report of what was found before repair.
pub fn repair_consistency(
    layout: &LayoutMap,
    hmap: &HeightMap,
    min_height: f64,
) -> Result<(HeightMap, ValidationReport), LayoutError> {
    let report = validate_consistency(layout, hmap, min_height)?;
    let mut fixed = hmap.clone();
    for &(x, y) in &report.low_buildings {
        fixed.set(x, y, min_height);
    }
    for &(x, y) in &report.stray_heights {
        fixed.set(x, y, 0.0);
    }
    if !report.stray_heights.is_empty() {
        log::warn!(
            "zeroed {} non-building pixels with positive height",
            report.stray_heights.len()
        );
    }
    if !report.low_buildings.is_empty() {
        log::warn!(
            "clamped {} building pixels up to {min_height} m",
            report.low_buildings.len()
        );
    }
    Ok((fixed, report))
}

/// Vector outline of a mask region in map meters: counter-clockwise outer
/// ring, clockwise holes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FootprintPolygon {
    pub outer: Vec<Vec2>,
    pub holes: Vec<Vec<Vec2>>,
}

impl FootprintPolygon {
    pub fn area(&self) -> f64 {
        ring_signed_area(&self.outer) + self.holes.iter().map(|h| ring_signed_area(h)).sum::<f64>()
    }

    pub fn vertex_count(&self) -> usize {
        self.outer.len() + self.holes.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_well_formed(&self) -> bool {
        self.outer.len() >= 3
            && ring_signed_area(&self.outer) > 0.0
            && self
                .holes
                .iter()
                .all(|h| h.len() >= 3 && ring_signed_area(h) < 0.0)
    }

    pub fn all_points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.outer.iter().chain(self.holes.iter().flatten()).copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildingInstance {
    pub id: String,
    pub pixel_count: usize,
    /// Pixel coordinates `(x, y)` belonging to this instance, raster order.
    pub pixels: Vec<(usize, usize)>,
    pub footprint: FootprintPolygon,
    pub obb: OrientedBox,
    pub target_height: f64,
}

/// Traces the single 8-connected region held in `sub` (a crop whose
/// top-left pixel sits at `offset` in the full frame).
fn footprint_of_region(sub: &Mask, offset: (usize, usize), frame: &MapFrame, simplify_tol: f64) -> FootprintPolygon {
    let mut rings = trace_rings(sub);
    for r in &mut rings {
        for c in r.iter_mut() {
            c.0 += offset.0 as i32;
            c.1 += offset.1 as i32;
        }
    }
    let map_rings = rings_to_map(&rings, frame);
    let mut outer = Vec::new();
    let mut holes = Vec::new();
    for r in map_rings {
        if ring_signed_area(&r) > 0.0 {
            outer = r;
        } else {
            holes.push(r);
        }
    }
    let (outer, holes) = simplify_polygon(&outer, &holes, simplify_tol);
    FootprintPolygon { outer, holes }
}

/// Vectorises a mask holding exactly one 8-connected component. The
/// boundary is traced along pixel edges and simplified with Douglas–Peucker.
pub fn trace_footprint(
    instance_mask: &Mask,
    meters_per_pixel: f64,
    simplify_tol: f64,
) -> Result<FootprintPolygon, LayoutError> {
    if instance_mask.none() {
        return Err(LayoutError::EmptyMask);
    }
    let (_, n) = label_components(instance_mask);
    if n != 1 {
        return Err(LayoutError::MultipleComponents(n));
    }
    let frame = MapFrame::for_grid(instance_mask, meters_per_pixel);
    Ok(footprint_of_region(instance_mask, (0, 0), &frame, simplify_tol))
}

/// Building instances as 8-connected components of the Building mask, in
/// raster order of each component's first pixel. Components smaller than
/// [`MIN_INSTANCE_PIXELS`] are dropped.
pub fn extract_building_instances(
    layout: &LayoutMap,
    hmap: &HeightMap,
) -> Result<Vec<BuildingInstance>, LayoutError> {
    check_dims(layout, hmap)?;
    let mask = layout.mask(SemanticClass::Building);
    let (labels, n) = label_components(&mask);
    let mut pixels: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n as usize];
    for y in 0..labels.height() {
        for x in 0..labels.width() {
            let l = *labels.get(x, y);
            if l > 0 {
                pixels[l as usize - 1].push((x, y));
            }
        }
    }
    let frame = layout.frame();
    let tol = 0.5 * layout.meters_per_pixel;
    let mut out = Vec::new();
    let mut dropped = 0usize;
    for px in pixels {
        if px.len() < MIN_INSTANCE_PIXELS {
            dropped += 1;
            continue;
        }
        let (x0, x1) = px.iter().fold((usize::MAX, 0), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (y0, y1) = px.iter().fold((usize::MAX, 0), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let mut sub = Grid::new(x1 - x0 + 1, y1 - y0 + 1, false);
        for &(x, y) in &px {
            sub.set(x - x0, y - y0, true);
        }
        let footprint = footprint_of_region(&sub, (x0, y0), &frame, tol);
        let obb = compute_obb(&footprint.outer).expect("footprint ring is nonempty");
        let target_height = px.iter().map(|&(x, y)| hmap.get(x, y)).sum::<f64>() / px.len() as f64;
        out.push(BuildingInstance {
            id: format!("bldg_{:04}", out.len()),
            pixel_count: px.len(),
            pixels: px,
            footprint,
            obb,
            target_height,
        });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} building components smaller than {MIN_INSTANCE_PIXELS} pixels");
    }
    Ok(out)
}
