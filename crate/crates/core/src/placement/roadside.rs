use super::{distance_transform, PlacementPoint, PointKind, PointSource, SamplingConfig};
use crate::grid::{Grid, MapFrame};
use crate::layout::{LayoutMap, SemanticClass};
use crate::math::Vec2;

/// Iso-distance polyline in map meters. Closed curves do not repeat their
/// first point.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetCurve {
    pub points: Vec<Vec2>,
    pub closed: bool,
}

impl OffsetCurve {
    pub fn length(&self) -> f64 {
        let n = self.points.len();
        let open: f64 = self.points.windows(2).map(|w| w[0].distance(w[1])).sum();
        if self.closed && n > 1 {
            open + self.points[n - 1].distance(self.points[0])
        } else {
            open
        }
    }
}

const NONE: u32 = u32::MAX;

/// Marching squares over a per-pixel field sampled at pixel centres,
/// chained into polylines. Saddle cells are resolved by the cell-centre
/// average. Open curves end on the map border.
pub fn offset_curves(field: &Grid<f64>, frame: &MapFrame, iso: f64) -> Vec<OffsetCurve> {
    let (w, h) = (field.width(), field.height());
    if w < 2 && h < 2 {
        return Vec::new();
    }
    let inside = |x: usize, y: usize| *field.get(x, y) < iso;
    // Edge ids: horizontal (x,y)-(x+1,y) → y*w + x; vertical (x,y)-(x,y+1) → w*h + y*w + x.
    let h_id = |x: usize, y: usize| (y * w + x) as u32;
    let v_id = |x: usize, y: usize| (w * h + y * w + x) as u32;
    let mut links = vec![[NONE; 2]; 2 * w * h];
    let mut link = |a: u32, b: u32| {
        for (p, q) in [(a, b), (b, a)] {
            let slot = &mut links[p as usize];
            if slot[0] == NONE {
                slot[0] = q;
            } else {
                slot[1] = q;
            }
        }
    };
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let tl = inside(x, y);
            let tr = inside(x + 1, y);
            let br = inside(x + 1, y + 1);
            let bl = inside(x, y + 1);
            let (top, right, bottom, left) = (h_id(x, y), v_id(x + 1, y), h_id(x, y + 1), v_id(x, y));
            let mut crossed = Vec::with_capacity(4);
            if tl != tr {
                crossed.push(top);
            }
            if tr != br {
                crossed.push(right);
            }
            if br != bl {
                crossed.push(bottom);
            }
            if bl != tl {
                crossed.push(left);
            }
            match crossed.len() {
                2 => link(crossed[0], crossed[1]),
                4 => {
                    let centre = (*field.get(x, y) + *field.get(x + 1, y) + *field.get(x + 1, y + 1) + *field.get(x, y + 1))
                        * 0.25
                        < iso;
                    if tl != centre {
                        link(top, left);
                        link(right, bottom);
                    } else {
                        link(top, right);
                        link(bottom, left);
                    }
                }
                _ => {}
            }
        }
    }

    let position = |id: u32| -> Vec2 {
        let id = id as usize;
        let (a, b) = if id < w * h {
            let (x, y) = (id % w, id / w);
            ((x, y), (x + 1, y))
        } else {
            let k = id - w * h;
            let (x, y) = (k % w, k / w);
            ((x, y), (x, y + 1))
        };
        let (va, vb) = (*field.get(a.0, a.1), *field.get(b.0, b.1));
        let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
        let (pa, pb) = (frame.pixel_center(a.0, a.1), frame.pixel_center(b.0, b.1));
        pa + (pb - pa) * t
    };

    let mut visited = vec![false; links.len()];
    let mut curves = Vec::new();
    let walk = |start: u32, visited: &mut Vec<bool>| -> (Vec<u32>, bool) {
        let mut chain = vec![start];
        visited[start as usize] = true;
        let mut prev = NONE;
        let mut cur = start;
        loop {
            let [a, b] = links[cur as usize];
            let next = if a != NONE && a != prev && !visited[a as usize] {
                a
            } else if b != NONE && b != prev && !visited[b as usize] {
                b
            } else {
                let closes = (a == start || b == start) && chain.len() > 2;
                return (chain, closes);
            };
            visited[next as usize] = true;
            chain.push(next);
            prev = cur;
            cur = next;
        }
    };
    // Open chains first, starting from their border endpoints.
    for id in 0..links.len() as u32 {
        let l = links[id as usize];
        if !visited[id as usize] && l[0] != NONE && l[1] == NONE {
            let (chain, _) = walk(id, &mut visited);
            curves.push(OffsetCurve {
                points: chain.into_iter().map(position).collect(),
                closed: false,
            });
        }
    }
    for id in 0..links.len() as u32 {
        if !visited[id as usize] && links[id as usize][0] != NONE {
            let (chain, closed) = walk(id, &mut visited);
            curves.push(OffsetCurve {
                points: chain.into_iter().map(position).collect(),
                closed,
            });
        }
    }
    curves
}

/// Points at arc lengths 0, s, 2s, … along a polyline. On closed curves
/// the last sample keeps at least s/2 of arc before the seam.
pub fn resample_polyline(curve: &OffsetCurve, spacing: f64) -> Vec<Vec2> {
    let pts = &curve.points;
    if pts.is_empty() || !(spacing > 0.0) {
        return Vec::new();
    }
    let total = curve.length();
    let limit = if curve.closed { total - 0.5 * spacing } else { total };
    let mut segs: Vec<(Vec2, Vec2)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    if curve.closed && pts.len() > 1 {
        segs.push((pts[pts.len() - 1], pts[0]));
    }
    let mut out = vec![pts[0]];
    let mut target = spacing;
    let mut walked = 0.0;
    for (a, b) in segs {
        let len = a.distance(b);
        while target <= walked + len && target <= limit {
            let t = if len > 0.0 { (target - walked) / len } else { 0.0 };
            out.push(a + (b - a) * t);
            target += spacing;
        }
        walked += len;
    }
    out
}

/// Roadside trees and streetlights: points spaced `roadside_spacing_s`
/// apart along the curves at distance `roadside_offset_d` from the road
/// mask, alternating Tree/Streetlight per curve. Points landing on Road,
/// Building or Water pixels are dropped.
pub fn sample_roadside_points(layout: &LayoutMap, cfg: &SamplingConfig) -> Vec<PlacementPoint> {
    let road = layout.mask(SemanticClass::Road);
    if road.none() || !cfg.is_valid() {
        return Vec::new();
    }
    let frame = layout.frame();
    let dt = distance_transform(&road, layout.meters_per_pixel);
    let mut out = Vec::new();
    for curve in offset_curves(&dt, &frame, cfg.roadside_offset_d) {
        let mut tree_next = true;
        for p in resample_polyline(&curve, cfg.roadside_spacing_s) {
            let Some((x, y)) = frame.pixel_at(p) else { continue };
            if matches!(
                layout.get(x, y),
                SemanticClass::Road | SemanticClass::Building | SemanticClass::Water
            ) {
                continue;
            }
            out.push(PlacementPoint {
                position: p,
                kind: if tree_next { PointKind::Tree } else { PointKind::Streetlight },
                source: PointSource::Roadside,
            });
            tree_next = !tree_next;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn road_strip(w: usize, h: usize, rows: std::ops::Range<usize>) -> LayoutMap {
        let mut l = LayoutMap::filled(w, h, SemanticClass::Ground);
        for y in rows {
            for x in 0..w {
                l.set(x, y, SemanticClass::Road);
            }
        }
        l
    }

    #[test]
    fn straight_strip_two_sides() {
        let layout = road_strip(50, 20, 8..12);
        let pts = sample_roadside_points(&layout, &SamplingConfig::default());
        let north: Vec<_> = pts.iter().filter(|p| p.position.y > 20.0).collect();
        let south: Vec<_> = pts.iter().filter(|p| p.position.y < 20.0).collect();
        for side in [&north, &south] {
            assert!((4..=5).contains(&side.len()), "{}", side.len());
            for w in side.windows(2) {
                let gap = w[0].position.distance(w[1].position);
                assert!((22.5..=27.5).contains(&gap), "{gap}");
            }
            assert_eq!(side[0].kind, PointKind::Tree);
            assert_eq!(side[1].kind, PointKind::Streetlight);
        }
    }

    #[test]
    fn water_side_dropped() {
        let mut layout = road_strip(50, 20, 8..12);
        for y in 0..8 {
            for x in 0..50 {
                layout.set(x, y, SemanticClass::Water);
            }
        }
        let pts = sample_roadside_points(&layout, &SamplingConfig::default());
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p.position.y < 20.0));
    }

    #[test]
    fn long_spacing_gives_one_point_per_curve() {
        let layout = road_strip(50, 20, 8..12);
        let cfg = SamplingConfig {
            roadside_spacing_s: 500.0,
            ..Default::default()
        };
        assert_eq!(sample_roadside_points(&layout, &cfg).len(), 2);
    }

    #[test]
    fn closed_loop_resampling() {
        let square = OffsetCurve {
            points: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(10.0, 0.0),
                Vec2::new(10.0, 10.0),
                Vec2::new(0.0, 10.0),
            ],
            closed: true,
        };
        let r = resample_polyline(&square, 10.0);
        assert_eq!(r.len(), 4);
        let r = resample_polyline(&square, 100.0);
        assert_eq!(r.len(), 1);
    }
}
