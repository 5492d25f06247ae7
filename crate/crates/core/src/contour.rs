//! Boundary extraction for binary masks.
//!
//! Boundaries are traced along pixel edges (on the corner grid) rather than
//! through pixel centres, so a traced ring encloses exactly the mask's pixel
//! area before simplification. The walk follows the Moore-neighbour rule
//! lifted to pixel corners; at diagonal "saddle" corners it turns so that
//! diagonally touching pixels stay on one ring (8-connectivity).

use std::collections::VecDeque;

use crate::grid::{Grid, MapFrame, Mask};
use crate::math::{ring_signed_area, Vec2};

/// Integer pixel-corner coordinate in image orientation (row axis down).
pub type Corner = (i32, i32);

/// Labels 8-connected components in raster order of their first pixel.
/// Returns the label grid (0 = background, labels start at 1) and the count.
pub fn label_components(mask: &Mask) -> (Grid<u32>, u32) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = Grid::new(w, h, 0u32);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if !*mask.get(x, y) || *labels.get(x, y) != 0 {
                continue;
            }
            next += 1;
            labels.set(x, y, next);
            queue.push_back((x, y));
            while let Some((cx, cy)) = queue.pop_front() {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if (dx, dy) == (0, 0) || !mask.in_bounds(nx, ny) {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if *mask.get(nx, ny) && *labels.get(nx, ny) == 0 {
                            labels.set(nx, ny, next);
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
        }
    }
    (labels, next)
}

#[derive(Clone, Copy)]
struct Edge {
    from: Corner,
    dir: (i32, i32),
}

/// Traces every boundary ring of `mask` in corner coordinates, with
/// collinear runs merged. Rings are returned counter-clockwise for outer
/// boundaries and clockwise for holes, as seen in map orientation.
pub fn trace_rings(mask: &Mask) -> Vec<Vec<Corner>> {
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let fg = |x: i32, y: i32| mask.get_or_default(x as i64, y as i64);
    let stride = (w + 1) as usize;
    let corner_index = |c: Corner| c.1 as usize * stride + c.0 as usize;

    let mut edges: Vec<Edge> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !fg(x, y) {
                continue;
            }
            if !fg(x, y - 1) {
                edges.push(Edge { from: (x, y), dir: (1, 0) });
            }
            if !fg(x + 1, y) {
                edges.push(Edge { from: (x + 1, y), dir: (0, 1) });
            }
            if !fg(x, y + 1) {
                edges.push(Edge { from: (x + 1, y + 1), dir: (-1, 0) });
            }
            if !fg(x - 1, y) {
                edges.push(Edge { from: (x, y + 1), dir: (0, -1) });
            }
        }
    }

    // Each corner has at most two outgoing boundary edges (saddles).
    let mut outgoing = vec![[u32::MAX; 2]; stride * (h + 1) as usize];
    for (i, e) in edges.iter().enumerate() {
        let slot = &mut outgoing[corner_index(e.from)];
        if slot[0] == u32::MAX {
            slot[0] = i as u32;
        } else {
            slot[1] = i as u32;
        }
    }

    let mut used = vec![false; edges.len()];
    let mut rings = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut ring: Vec<Corner> = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let e = edges[cur];
            let to = (e.from.0 + e.dir.0, e.from.1 + e.dir.1);
            let slot = outgoing[corner_index(to)];
            let next = if slot[1] == u32::MAX {
                slot[0]
            } else {
                // Saddle: turn left (image orientation) to keep diagonal
                // foreground pixels on the same ring.
                let left = (e.dir.1, -e.dir.0);
                if edges[slot[0] as usize].dir == left {
                    slot[0]
                } else {
                    slot[1]
                }
            } as usize;
            if edges[next].dir != e.dir {
                ring.push(to);
            }
            if next == start {
                break;
            }
            cur = next;
        }
        // The start edge's origin is a vertex only if the walk turned there;
        // the loop above already recorded it as the endpoint of the last edge.
        if ring.len() >= 3 {
            // Foreground sits right of travel in image rows, i.e. left of
            // travel once rows point north.
            ring.reverse();
            rings.push(ring);
        }
    }
    rings
}

/// Converts corner rings to map-meter rings.
pub fn rings_to_map(rings: &[Vec<Corner>], frame: &MapFrame) -> Vec<Vec<Vec2>> {
    rings
        .iter()
        .map(|r| {
            r.iter()
                .map(|&(cx, cy)| frame.corner(cx as f64, cy as f64))
                .collect()
        })
        .collect()
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn douglas_peucker(points: &[Vec2], tol: f64, keep: &mut [bool], lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let (mut best, mut best_d) = (lo, -1.0);
    for i in lo + 1..hi {
        let d = point_segment_distance(points[i], points[lo], points[hi]);
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    if best_d > tol {
        keep[best] = true;
        douglas_peucker(points, tol, keep, lo, best);
        douglas_peucker(points, tol, keep, best, hi);
    }
}

/// Douglas–Peucker on a closed ring. The ring is split at vertex 0 and the
/// vertex farthest from it; both halves are simplified independently.
pub fn simplify_ring(ring: &[Vec2], tol: f64) -> Vec<Vec2> {
    let n = ring.len();
    if tol <= 0.0 || n <= 4 {
        return ring.to_vec();
    }
    let far = (1..n)
        .max_by(|&a, &b| {
            ring[a]
                .distance(ring[0])
                .total_cmp(&ring[b].distance(ring[0]))
        })
        .unwrap_or(0);
    let mut closed: Vec<Vec2> = ring.to_vec();
    closed.push(ring[0]);
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[far] = true;
    keep[n] = true;
    douglas_peucker(&closed, tol, &mut keep, 0, far);
    douglas_peucker(&closed, tol, &mut keep, far, n);
    (0..n).filter(|&i| keep[i]).map(|i| ring[i]).collect()
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True when segments `ab` and `cd` cross or overlap somewhere other than a
/// shared endpoint.
pub fn segments_conflict(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let shared = |p: Vec2| p == a || p == b;
    // Touching cases: an endpoint lying on the other segment's interior.
    (o1 == 0.0 && on_segment(a, b, c) && !shared(c))
        || (o2 == 0.0 && on_segment(a, b, d) && !shared(d))
        || (o3 == 0.0 && on_segment(c, d, a) && !(a == c || a == d))
        || (o4 == 0.0 && on_segment(c, d, b) && !(b == c || b == d))
}

/// Checks that no two edges across all rings cross or overlap. Rings may
/// share vertices (pinch points at diagonal pixel contacts).
pub fn rings_are_simple(rings: &[Vec<Vec2>]) -> bool {
    let segs: Vec<(usize, usize, Vec2, Vec2)> = rings
        .iter()
        .enumerate()
        .flat_map(|(ri, r)| {
            let n = r.len();
            (0..n).map(move |i| (ri, i, r[i], r[(i + 1) % n]))
        })
        .collect();
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let (ri, ii, a, b) = segs[i];
            let (rj, jj, c, d) = segs[j];
            if ri == rj {
                let n = rings[ri].len();
                if (ii + 1) % n == jj || (jj + 1) % n == ii {
                    // Adjacent edges only conflict if they fold back.
                    if orient(a, b, d) == 0.0 && orient(a, b, c) == 0.0 && (b - a).dot(d - c) < 0.0
                    {
                        return true;
                    }
                    continue;
                }
            }
            if segments_conflict(a, b, c, d) {
                return true;
            }
        }
    }
    rings.iter().all(|r| r.len() >= 3)
}

/// Simplifies an outer ring and its holes together, keeping the originals if
/// simplification would degenerate a ring, flip an orientation, or introduce
/// a crossing.
pub fn simplify_polygon(outer: &[Vec2], holes: &[Vec<Vec2>], tol: f64) -> (Vec<Vec2>, Vec<Vec<Vec2>>) {
    if tol <= 0.0 {
        return (outer.to_vec(), holes.to_vec());
    }
    let s_outer = simplify_ring(outer, tol);
    let s_holes: Vec<Vec<Vec2>> = holes.iter().map(|h| simplify_ring(h, tol)).collect();
    let orientation_ok = s_outer.len() >= 3
        && ring_signed_area(&s_outer) > 0.0
        && s_holes
            .iter()
            .all(|h| h.len() >= 3 && ring_signed_area(h) < 0.0);
    if !orientation_ok {
        return (outer.to_vec(), holes.to_vec());
    }
    let mut all = vec![s_outer.clone()];
    all.extend(s_holes.iter().cloned());
    if rings_are_simple(&all) {
        (s_outer, s_holes)
    } else {
        (outer.to_vec(), holes.to_vec())
    }
}
