//! Ear-clipping triangulation of polygons with holes.
//!
//! Holes are merged into the outer ring through bridge edges (leftmost hole
//! vertex first), then the resulting weakly simple ring is clipped. The
//! structure follows mapbox/earcut: a circular doubly linked list, with
//! fallback passes that filter degenerate points, cure local
//! self-intersections, and finally split the ring along a valid diagonal.

use crate::math::{ring_signed_area, Vec2};

#[derive(Clone, Copy, Debug)]
struct Node {
    /// Index into the caller's flattened vertex list.
    i: usize,
    x: f64,
    y: f64,
    prev: usize,
    next: usize,
    steiner: bool,
}

struct Clipper {
    nodes: Vec<Node>,
    triangles: Vec<[usize; 3]>,
}

fn area(p: &Node, q: &Node, r: &Node) -> f64 {
    (q.y - p.y) * (r.x - q.x) - (q.x - p.x) * (r.y - q.y)
}

fn equals(a: &Node, b: &Node) -> bool {
    a.x == b.x && a.y == b.y
}

#[allow(clippy::too_many_arguments)]
fn point_in_triangle(ax: f64, ay: f64, bx: f64, by: f64, cx: f64, cy: f64, px: f64, py: f64) -> bool {
    (cx - px) * (ay - py) >= (ax - px) * (cy - py)
        && (ax - px) * (by - py) >= (bx - px) * (ay - py)
        && (bx - px) * (cy - py) >= (cx - px) * (by - py)
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn on_segment(p: &Node, q: &Node, r: &Node) -> bool {
    q.x <= p.x.max(r.x) && q.x >= p.x.min(r.x) && q.y <= p.y.max(r.y) && q.y >= p.y.min(r.y)
}

fn intersects(p1: &Node, q1: &Node, p2: &Node, q2: &Node) -> bool {
    let o1 = sign(area(p1, q1, p2));
    let o2 = sign(area(p1, q1, q2));
    let o3 = sign(area(p2, q2, p1));
    let o4 = sign(area(p2, q2, q1));
    (o1 != o2 && o3 != o4)
        || (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, q2, q1))
        || (o3 == 0 && on_segment(p2, p1, q2))
        || (o4 == 0 && on_segment(p2, q1, q2))
}

impl Clipper {
    fn n(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    fn insert(&mut self, i: usize, p: Vec2, last: Option<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            i,
            x: p.x,
            y: p.y,
            prev: id,
            next: id,
            steiner: false,
        });
        if let Some(last) = last {
            let ln = self.nodes[last].next;
            self.nodes[id].next = ln;
            self.nodes[id].prev = last;
            self.nodes[ln].prev = id;
            self.nodes[last].next = id;
        }
        id
    }

    fn remove(&mut self, p: usize) {
        let Node { prev, next, .. } = self.nodes[p];
        self.nodes[next].prev = prev;
        self.nodes[prev].next = next;
    }

    /// Builds a ring with the requested orientation (counter-clockwise in
    /// the standard y-up sense when `ccw`).
    fn linked_list(&mut self, ring: &[Vec2], first_index: usize, ccw: bool) -> Option<usize> {
        let mut last = None;
        if ccw == (ring_signed_area(ring) > 0.0) {
            for (k, &p) in ring.iter().enumerate() {
                last = Some(self.insert(first_index + k, p, last));
            }
        } else {
            for (k, &p) in ring.iter().enumerate().rev() {
                last = Some(self.insert(first_index + k, p, last));
            }
        }
        if let Some(l) = last {
            let nx = self.n(l).next;
            if equals(self.n(l), self.n(nx)) {
                self.remove(l);
                last = Some(nx);
            }
        }
        last
    }

    fn filter_points(&mut self, start: usize, end: Option<usize>) -> usize {
        let mut end = end.unwrap_or(start);
        let mut p = start;
        loop {
            let again;
            let (pr, nx) = (self.n(p).prev, self.n(p).next);
            if !self.n(p).steiner
                && (equals(self.n(p), self.n(nx)) || area(self.n(pr), self.n(p), self.n(nx)) == 0.0)
            {
                self.remove(p);
                p = pr;
                end = pr;
                if p == self.n(p).next {
                    break;
                }
                again = true;
            } else {
                p = nx;
                again = false;
            }
            if !again && p == end {
                break;
            }
        }
        end
    }

    fn is_ear(&self, ear: usize) -> bool {
        let a = self.n(self.n(ear).prev);
        let b = self.n(ear);
        let c = self.n(b.next);
        if area(a, b, c) >= 0.0 {
            return false;
        }
        let (x0, x1) = (a.x.min(b.x).min(c.x), a.x.max(b.x).max(c.x));
        let (y0, y1) = (a.y.min(b.y).min(c.y), a.y.max(b.y).max(c.y));
        let mut p = c.next;
        let stop = b.prev;
        while p != stop {
            let pn = self.n(p);
            if pn.x >= x0
                && pn.x <= x1
                && pn.y >= y0
                && pn.y <= y1
                && point_in_triangle(a.x, a.y, b.x, b.y, c.x, c.y, pn.x, pn.y)
                && area(self.n(pn.prev), pn, self.n(pn.next)) >= 0.0
            {
                return false;
            }
            p = pn.next;
        }
        true
    }

    fn earcut_linked(&mut self, ear: Option<usize>, pass: u8) {
        let Some(mut ear) = ear else { return };
        let mut stop = ear;
        while self.n(ear).prev != self.n(ear).next {
            let prev = self.n(ear).prev;
            let next = self.n(ear).next;
            if self.is_ear(ear) {
                self.triangles
                    .push([self.n(prev).i, self.n(ear).i, self.n(next).i]);
                self.remove(ear);
                ear = self.n(next).next;
                stop = ear;
                continue;
            }
            ear = next;
            if ear == stop {
                match pass {
                    0 => {
                        let e = self.filter_points(ear, None);
                        self.earcut_linked(Some(e), 1);
                    }
                    1 => {
                        let e = self.filter_points(ear, None);
                        let e = self.cure_local_intersections(e);
                        self.earcut_linked(Some(e), 2);
                    }
                    _ => self.split_earcut(ear),
                }
                break;
            }
        }
    }

    fn locally_inside(&self, a: usize, b: usize) -> bool {
        let (an, bn) = (self.n(a), self.n(b));
        let (ap, anx) = (self.n(an.prev), self.n(an.next));
        if area(ap, an, anx) < 0.0 {
            area(an, bn, anx) >= 0.0 && area(an, ap, bn) >= 0.0
        } else {
            area(an, bn, ap) < 0.0 || area(an, anx, bn) < 0.0
        }
    }

    fn cure_local_intersections(&mut self, start: usize) -> usize {
        let mut start = start;
        let mut p = start;
        loop {
            let a = self.n(p).prev;
            let pn = self.n(p).next;
            let b = self.n(pn).next;
            if !equals(self.n(a), self.n(b))
                && intersects(self.n(a), self.n(p), self.n(pn), self.n(b))
                && self.locally_inside(a, b)
                && self.locally_inside(b, a)
            {
                self.triangles
                    .push([self.n(a).i, self.n(p).i, self.n(b).i]);
                self.remove(p);
                self.remove(pn);
                p = b;
                start = b;
            }
            p = self.n(p).next;
            if p == start {
                break;
            }
        }
        self.filter_points(p, None)
    }

    fn intersects_polygon(&self, a: usize, b: usize) -> bool {
        let (ai, bi) = (self.n(a).i, self.n(b).i);
        let mut p = a;
        loop {
            let pn = self.n(p);
            let nx = self.n(pn.next);
            if pn.i != ai && nx.i != ai && pn.i != bi && nx.i != bi && intersects(pn, nx, self.n(a), self.n(b)) {
                return true;
            }
            p = pn.next;
            if p == a {
                return false;
            }
        }
    }

    fn middle_inside(&self, a: usize, b: usize) -> bool {
        let (an, bn) = (self.n(a), self.n(b));
        let (px, py) = ((an.x + bn.x) / 2.0, (an.y + bn.y) / 2.0);
        let mut inside = false;
        let mut p = a;
        loop {
            let pn = self.n(p);
            let nx = self.n(pn.next);
            if ((pn.y > py) != (nx.y > py))
                && nx.y != pn.y
                && px < (nx.x - pn.x) * (py - pn.y) / (nx.y - pn.y) + pn.x
            {
                inside = !inside;
            }
            p = pn.next;
            if p == a {
                return inside;
            }
        }
    }

    fn is_valid_diagonal(&self, a: usize, b: usize) -> bool {
        let (an, bn) = (self.n(a), self.n(b));
        self.n(an.next).i != bn.i
            && self.n(an.prev).i != bn.i
            && !self.intersects_polygon(a, b)
            && ((self.locally_inside(a, b)
                && self.locally_inside(b, a)
                && self.middle_inside(a, b)
                && (area(self.n(an.prev), an, self.n(bn.prev)) != 0.0
                    || area(an, self.n(bn.prev), bn) != 0.0))
                || (equals(an, bn)
                    && area(self.n(an.prev), an, self.n(an.next)) > 0.0
                    && area(self.n(bn.prev), bn, self.n(bn.next)) > 0.0))
    }

    /// Links `a` and `b` with a doubled edge, splitting the ring in two.
    /// Returns the copy of `b` that starts the second ring.
    fn split_polygon(&mut self, a: usize, b: usize) -> usize {
        let a2 = self.nodes.len();
        let mut na = self.nodes[a];
        na.prev = a2;
        na.next = a2;
        self.nodes.push(na);
        let b2 = self.nodes.len();
        let mut nb = self.nodes[b];
        nb.prev = b2;
        nb.next = b2;
        self.nodes.push(nb);

        let an = self.n(a).next;
        let bp = self.n(b).prev;
        self.nodes[a].next = b;
        self.nodes[b].prev = a;
        self.nodes[a2].next = an;
        self.nodes[an].prev = a2;
        self.nodes[b2].next = a2;
        self.nodes[a2].prev = b2;
        self.nodes[bp].next = b2;
        self.nodes[b2].prev = bp;
        b2
    }

    fn split_earcut(&mut self, start: usize) {
        let mut a = start;
        loop {
            let mut b = self.n(self.n(a).next).next;
            while b != self.n(a).prev {
                if self.n(a).i != self.n(b).i && self.is_valid_diagonal(a, b) {
                    let c = self.split_polygon(a, b);
                    let an = self.n(a).next;
                    let a = self.filter_points(a, Some(an));
                    let cn = self.n(c).next;
                    let c = self.filter_points(c, Some(cn));
                    self.earcut_linked(Some(a), 0);
                    self.earcut_linked(Some(c), 0);
                    return;
                }
                b = self.n(b).next;
            }
            a = self.n(a).next;
            if a == start {
                return;
            }
        }
    }

    fn leftmost(&self, start: usize) -> usize {
        let mut p = start;
        let mut best = start;
        loop {
            let (pn, bn) = (self.n(p), self.n(best));
            if pn.x < bn.x || (pn.x == bn.x && pn.y < bn.y) {
                best = p;
            }
            p = pn.next;
            if p == start {
                return best;
            }
        }
    }

    fn sector_contains_sector(&self, m: usize, p: usize) -> bool {
        let (mn, pn) = (self.n(m), self.n(p));
        area(self.n(mn.prev), mn, self.n(pn.prev)) < 0.0 && area(self.n(pn.next), mn, self.n(mn.next)) < 0.0
    }

    fn find_hole_bridge(&self, hole: usize, outer: usize) -> Option<usize> {
        let (hx, hy) = (self.n(hole).x, self.n(hole).y);
        let mut qx = f64::NEG_INFINITY;
        let mut m: Option<usize> = None;
        let mut p = outer;
        loop {
            let pn = self.n(p);
            let nx = self.n(pn.next);
            if hy <= pn.y && hy >= nx.y && nx.y != pn.y {
                let x = pn.x + (hy - pn.y) * (nx.x - pn.x) / (nx.y - pn.y);
                if x <= hx && x > qx {
                    qx = x;
                    m = Some(if pn.x < nx.x { p } else { pn.next });
                    if x == hx {
                        return m;
                    }
                }
            }
            p = pn.next;
            if p == outer {
                break;
            }
        }
        let mut m = m?;
        let stop = m;
        let (mx, my) = (self.n(m).x, self.n(m).y);
        let mut tan_min = f64::INFINITY;
        let mut p = m;
        loop {
            let pn = self.n(p);
            if hx >= pn.x
                && pn.x >= mx
                && hx != pn.x
                && point_in_triangle(
                    if hy < my { hx } else { qx },
                    hy,
                    mx,
                    my,
                    if hy < my { qx } else { hx },
                    hy,
                    pn.x,
                    pn.y,
                )
            {
                let tan = (hy - pn.y).abs() / (hx - pn.x);
                if self.locally_inside(p, hole)
                    && (tan < tan_min
                        || (tan == tan_min
                            && (pn.x > self.n(m).x
                                || (pn.x == self.n(m).x && self.sector_contains_sector(m, p)))))
                {
                    m = p;
                    tan_min = tan;
                }
            }
            p = pn.next;
            if p == stop {
                return Some(m);
            }
        }
    }

    fn eliminate_hole(&mut self, hole: usize, outer: usize) -> usize {
        let Some(bridge) = self.find_hole_bridge(hole, outer) else {
            return outer;
        };
        let bridge_reverse = self.split_polygon(bridge, hole);
        let brn = self.n(bridge_reverse).next;
        self.filter_points(bridge_reverse, Some(brn));
        let bn = self.n(bridge).next;
        self.filter_points(bridge, Some(bn))
    }
}

/// Triangulates an outer ring with holes. Vertex indices refer to the
/// concatenation `outer ++ holes[0] ++ holes[1] ++ …`. Output triangles are
/// counter-clockwise in the y-up plane.
pub fn triangulate_polygon(outer: &[Vec2], holes: &[Vec<Vec2>]) -> Vec<[u32; 3]> {
    if outer.len() < 3 {
        return Vec::new();
    }
    let mut c = Clipper {
        nodes: Vec::with_capacity((outer.len() + holes.iter().map(Vec::len).sum::<usize>()) * 3 / 2),
        triangles: Vec::new(),
    };
    let Some(mut outer_node) = c.linked_list(outer, 0, true) else {
        return Vec::new();
    };
    if c.n(outer_node).next == c.n(outer_node).prev {
        return Vec::new();
    }
    let mut offset = outer.len();
    let mut queue = Vec::new();
    for h in holes {
        if let Some(list) = c.linked_list(h, offset, false) {
            if list == c.n(list).next {
                c.nodes[list].steiner = true;
            }
            queue.push(c.leftmost(list));
        }
        offset += h.len();
    }
    queue.sort_by(|&a, &b| {
        let (an, bn) = (c.n(a), c.n(b));
        an.x.total_cmp(&bn.x).then(an.y.total_cmp(&bn.y))
    });
    for h in queue {
        outer_node = c.eliminate_hole(h, outer_node);
    }
    c.earcut_linked(Some(outer_node), 0);
    c.triangles
        .into_iter()
        .map(|t| t.map(|i| i as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_area(pts: &[Vec2], tris: &[[u32; 3]]) -> f64 {
        tris.iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| pts[i as usize]);
                (b - a).cross(c - a) * 0.5
            })
            .sum()
    }

    fn sq(x0: f64, y0: f64, s: f64) -> Vec<Vec2> {
        vec![
            Vec2::new(x0, y0),
            Vec2::new(x0 + s, y0),
            Vec2::new(x0 + s, y0 + s),
            Vec2::new(x0, y0 + s),
        ]
    }

    #[test]
    fn square_two_triangles() {
        let s = sq(0.0, 0.0, 1.0);
        let t = triangulate_polygon(&s, &[]);
        assert_eq!(t.len(), 2);
        assert_eq!(total_area(&s, &t), 1.0);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let mut s = sq(0.0, 0.0, 2.0);
        s.reverse();
        let t = triangulate_polygon(&s, &[]);
        assert_eq!(total_area(&s, &t), 4.0);
    }

    #[test]
    fn square_with_hole() {
        let outer = sq(0.0, 0.0, 10.0);
        let mut hole = sq(3.0, 3.0, 4.0);
        hole.reverse();
        let t = triangulate_polygon(&outer, &[hole.clone()]);
        let mut all = outer.clone();
        all.extend(hole);
        assert!((total_area(&all, &t) - 84.0).abs() < 1e-9);
        assert_eq!(t.len(), 8);
    }

    #[test]
    fn concave_comb() {
        let ring: Vec<Vec2> = [
            (0.0, 0.0),
            (5.0, 0.0),
            (5.0, 3.0),
            (4.0, 3.0),
            (4.0, 1.0),
            (3.0, 1.0),
            (3.0, 3.0),
            (2.0, 3.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        ]
        .iter()
        .map(|&(x, y)| Vec2::new(x, y))
        .collect();
        let t = triangulate_polygon(&ring, &[]);
        assert_eq!(t.len(), ring.len() - 2);
        assert!((total_area(&ring, &t) - ring_signed_area(&ring)).abs() < 1e-9);
    }

    #[test]
    fn pinched_ring() {
        // two squares touching at one corner, traced as one ring
        let ring: Vec<Vec2> = [
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (2.0, 1.0),
            (2.0, 2.0),
            (1.0, 2.0),
            (1.0, 1.0),
            (0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y)| Vec2::new(x, y))
        .collect();
        let t = triangulate_polygon(&ring, &[]);
        assert!((total_area(&ring, &t) - 2.0).abs() < 1e-12);
    }
}
