use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PlacementPoint, PointKind, PointSource, SamplingConfig};
use crate::grid::{MapFrame, Mask};
use crate::math::Vec2;

struct Background {
    cell: f64,
    cols: usize,
    rows: usize,
    slots: Vec<u32>,
}

impl Background {
    const EMPTY: u32 = u32::MAX;

    fn new(extent: Vec2, r: f64) -> Self {
        let cell = r / std::f64::consts::SQRT_2;
        let cols = ((extent.x / cell).ceil() as usize).max(1);
        let rows = ((extent.y / cell).ceil() as usize).max(1);
        Background {
            cell,
            cols,
            rows,
            slots: vec![Self::EMPTY; cols * rows],
        }
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        (
            ((p.x / self.cell) as usize).min(self.cols - 1),
            ((p.y / self.cell) as usize).min(self.rows - 1),
        )
    }

    fn is_free(&self, p: Vec2, r: f64, points: &[Vec2]) -> bool {
        let (cx, cy) = self.cell_of(p);
        let r2 = r * r;
        for y in cy.saturating_sub(2)..(cy + 3).min(self.rows) {
            for x in cx.saturating_sub(2)..(cx + 3).min(self.cols) {
                let s = self.slots[y * self.cols + x];
                if s != Self::EMPTY {
                    let d = points[s as usize] - p;
                    if d.dot(d) < r2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn insert(&mut self, p: Vec2, index: usize) {
        let (cx, cy) = self.cell_of(p);
        self.slots[cy * self.cols + cx] = index as u32;
    }
}

/// Bridson dart throwing restricted to mask pixels. When the active list
/// drains, a new seed is drawn from the remaining mask pixels (visited in
/// seeded random order) so every disconnected patch receives samples.
pub fn poisson_disk_sample(mask: &Mask, meters_per_pixel: f64, cfg: &SamplingConfig) -> Vec<PlacementPoint> {
    if mask.none() || !(cfg.radius_r > 0.0) {
        return Vec::new();
    }
    let frame = MapFrame::for_grid(mask, meters_per_pixel);
    let extent = frame.extent();
    let r = cfg.radius_r;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grid = Background::new(extent, r);
    let mut points: Vec<Vec2> = Vec::new();
    let on_mask = |p: Vec2| frame.pixel_at(p).is_some_and(|(x, y)| *mask.get(x, y));

    let mut seeds: Vec<(usize, usize)> = mask.ones().collect();
    seeds.shuffle(&mut rng);
    for (sx, sy) in seeds {
        let corner = frame.corner(sx as f64, sy as f64 + 1.0);
        let seed = corner + Vec2::new(rng.random::<f64>(), rng.random::<f64>()) * meters_per_pixel;
        if !on_mask(seed) || !grid.is_free(seed, r, &points) {
            continue;
        }
        grid.insert(seed, points.len());
        points.push(seed);
        let mut active = vec![points.len() - 1];
        while !active.is_empty() {
            let slot = rng.random_range(0..active.len());
            let origin = points[active[slot]];
            let mut placed = false;
            for _ in 0..cfg.max_attempts_k {
                let radius = r * (1.0 + rng.random::<f64>());
                let angle = rng.random::<f64>() * std::f64::consts::TAU;
                let cand = origin + Vec2::new(angle.cos(), angle.sin()) * radius;
                if frame.contains(cand) && on_mask(cand) && grid.is_free(cand, r, &points) {
                    grid.insert(cand, points.len());
                    active.push(points.len());
                    points.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                active.swap_remove(slot);
            }
        }
    }
    points
        .into_iter()
        .map(|position| PlacementPoint {
            position,
            kind: PointKind::Tree,
            source: PointSource::VegetationFill,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn min_pair_distance(pts: &[PlacementPoint]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min(pts[i].position.distance(pts[j].position));
            }
        }
        best
    }

    #[test]
    fn empty_mask() {
        assert!(poisson_disk_sample(&Grid::new(8, 8, false), 1.0, &SamplingConfig::default()).is_empty());
    }

    #[test]
    fn radius_beyond_diagonal() {
        let cfg = SamplingConfig {
            radius_r: 100.0,
            ..Default::default()
        };
        assert!(poisson_disk_sample(&Grid::new(10, 10, true), 2.0, &cfg).len() <= 1);
    }

    #[test]
    fn full_square_respects_radius() {
        let mask = Grid::new(50, 50, true);
        let cfg = SamplingConfig {
            radius_r: 10.0,
            seed: 4,
            ..Default::default()
        };
        let pts = poisson_disk_sample(&mask, 2.0, &cfg);
        assert!(pts.len() > 40);
        assert!(min_pair_distance(&pts) >= 10.0);
        assert_eq!(pts, poisson_disk_sample(&mask, 2.0, &cfg));
    }

    #[test]
    fn disjoint_patches_all_covered() {
        let mask = Grid::from_fn(60, 20, |x, _| x < 10 || x >= 50);
        let cfg = SamplingConfig {
            radius_r: 4.0,
            ..Default::default()
        };
        let pts = poisson_disk_sample(&mask, 1.0, &cfg);
        assert!(pts.iter().any(|p| p.position.x < 10.0));
        assert!(pts.iter().any(|p| p.position.x > 50.0));
        let frame = MapFrame::for_grid(&mask, 1.0);
        for p in &pts {
            let (x, y) = frame.pixel_at(p.position).unwrap();
            assert!(*mask.get(x, y));
        }
    }
}
