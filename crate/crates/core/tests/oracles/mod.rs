//! Brute-force references shared by the invariant and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use majutsu_core::grid::{Grid, Mask};
use majutsu_core::layout::{HeightMap, LayoutMap, SemanticClass};
use majutsu_core::math::Vec2;

pub fn shoelace(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| ring[i].x * ring[(i + 1) % n].y - ring[(i + 1) % n].x * ring[i].y).sum::<f64>() / 2.0
}

/// Minimum-area enclosing rectangle over every direction spanned by a
/// pair of input points, a superset of the hull edge directions.
pub fn brute_min_rect_area(points: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..points.len() {
            let d = points[j] - points[i];
            if d.length() < 1e-12 {
                continue;
            }
            let u = d / d.length();
            let v = Vec2::new(-u.y, u.x);
            let (mut a0, mut a1, mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                let (a, b) = (p.dot(u), p.dot(v));
                a0 = a0.min(a);
                a1 = a1.max(a);
                b0 = b0.min(b);
                b1 = b1.max(b);
            }
            best = best.min((a1 - a0) * (b1 - b0));
        }
    }
    best
}

/// 8-connected components by breadth-first flood fill.
pub fn flood_fill_components(mask: &Mask) -> Vec<BTreeSet<(usize, usize)>> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !*mask.get(x, y) || seen[y * w + x] {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([(x, y)]);
            seen[y * w + x] = true;
            while let Some((cx, cy)) = queue.pop_front() {
                comp.insert((cx, cy));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if *mask.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
            out.push(comp);
        }
    }
    out
}

pub fn perimeter_pixels(pixels: &BTreeSet<(usize, usize)>) -> usize {
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && pixels.contains(&(x as usize, y as usize));
    pixels
        .iter()
        .map(|&(x, y)| {
            let (x, y) = (x as i64, y as i64);
            [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter(|(dx, dy)| !inside(x + dx, y + dy))
                .count()
        })
        .sum()
}

pub fn layout_from_mask(mask: &Mask, mpp: f64) -> (LayoutMap, HeightMap) {
    let cells = Grid::from_fn(mask.width(), mask.height(), |x, y| {
        if *mask.get(x, y) {
            SemanticClass::Building
        } else {
            SemanticClass::Ground
        }
    });
    let mut hmap = HeightMap::zeros(mask.width(), mask.height());
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if *mask.get(x, y) {
                hmap.set(x, y, 10.0 + (x + y) as f64);
            }
        }
    }
    (LayoutMap::new(cells, mpp).unwrap(), hmap)
}

/// Distance from every pixel centre to the nearest set pixel centre, by
/// exhaustive search.
pub fn brute_distance_field(mask: &Mask, mpp: f64) -> Grid<f64> {
    let on: Vec<(usize, usize)> = mask.ones().collect();
    Grid::from_fn(mask.width(), mask.height(), |x, y| {
        on.iter()
            .map(|&(u, v)| ((x as f64 - u as f64).hypot(y as f64 - v as f64)) * mpp)
            .fold(f64::INFINITY, f64::min)
    })
}
