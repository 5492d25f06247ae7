use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::math::{wrap_angle, Vec2};

/// Rotated rectangle in the map plane. `half_w` is measured along the
/// direction `yaw`, `half_l` along its left-hand perpendicular.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec2,
    /// Radians in `[0, π)`.
    pub yaw: f64,
    pub half_w: f64,
    pub half_l: f64,
}

impl OrientedBox {
    pub fn area(&self) -> f64 {
        4.0 * self.half_w * self.half_l
    }

    pub fn axes(&self) -> (Vec2, Vec2) {
        let u = Vec2::new(self.yaw.cos(), self.yaw.sin());
        (u, Vec2::new(-u.y, u.x))
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (u, v) = self.axes();
        let (a, b) = (u * self.half_w, v * self.half_l);
        [
            self.center - a - b,
            self.center + a - b,
            self.center + a + b,
            self.center - a + b,
        ]
    }

    /// Whether `p` lies inside the box grown by `tol` on every side.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.half_w + tol && d.dot(v).abs() <= self.half_l + tol
    }
}

/// Convex hull by Andrew's monotone chain; counter-clockwise, without
/// collinear points, starting at the lowest-x (then lowest-y) point.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex
/// hull. Among equal-area candidates the smallest normalised yaw wins.
pub fn compute_obb(points: &[Vec2]) -> Result<OrientedBox, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let hull = convex_hull(points);
    match hull.len() {
        1 => {
            return Ok(OrientedBox {
                center: hull[0],
                yaw: 0.0,
                half_w: 0.0,
                half_l: 0.0,
            })
        }
        2 => {
            let d = hull[1] - hull[0];
            return Ok(OrientedBox {
                center: (hull[0] + hull[1]) * 0.5,
                yaw: wrap_angle(d.y.atan2(d.x), std::f64::consts::PI),
                half_w: d.length() * 0.5,
                half_l: 0.0,
            });
        }
        _ => {}
    }

    let n = hull.len();
    let at = |k: usize| hull[k % n];
    let edge_dir = |i: usize| (at(i + 1) - at(i)).normalized();

    // Caliper indices for edge 0: farthest along u, farthest along v,
    // nearest along u.
    let u0 = edge_dir(0);
    let v0 = Vec2::new(-u0.y, u0.x);
    let argmax = |f: &dyn Fn(Vec2) -> f64| {
        (0..n)
            .max_by(|&a, &b| f(hull[a]).total_cmp(&f(hull[b])))
            .unwrap()
    };
    let mut right = argmax(&|p| p.dot(u0));
    let mut top = argmax(&|p| p.dot(v0));
    let mut left = argmax(&|p| -p.dot(u0));

    let mut best: Option<(f64, OrientedBox)> = None;
    for i in 0..n {
        let u = edge_dir(i);
        let v = Vec2::new(-u.y, u.x);
        while (at(right + 1) - at(right)).dot(u) > 0.0 {
            right += 1;
        }
        while (at(top + 1) - at(top)).dot(v) > 0.0 {
            top += 1;
        }
        if i == 0 {
            left = left.max(top);
        }
        while (at(left + 1) - at(left)).dot(u) < 0.0 {
            left += 1;
        }
        let origin = at(i);
        let max_u = (at(right) - origin).dot(u);
        let min_u = (at(left) - origin).dot(u);
        let height = (at(top) - origin).dot(v);
        let width = max_u - min_u;
        let area = width * height;
        let raw_yaw = u.y.atan2(u.x);
        let yaw = wrap_angle(raw_yaw, std::f64::consts::PI);
        let center = origin + u * ((max_u + min_u) * 0.5) + v * (height * 0.5);
        let candidate = OrientedBox {
            center,
            yaw,
            half_w: width * 0.5,
            half_l: height * 0.5,
        };
        let tie_tol = 1e-9 * area.abs().max(1.0);
        best = match best {
            None => Some((area, candidate)),
            Some((ba, bb)) => {
                if area < ba - tie_tol || ((area - ba).abs() <= tie_tol && yaw < bb.yaw) {
                    Some((area, candidate))
                } else {
                    Some((ba, bb))
                }
            }
        };
    }
    Ok(best.expect("hull has edges").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn axis_aligned_rectangle() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 20.0),
            Vec2::new(0.0, 20.0),
        ];
        let b = compute_obb(&pts).unwrap();
        assert!(b.yaw == 0.0 || (b.yaw - FRAC_PI_2).abs() < 1e-12);
        assert!((b.half_w - 5.0).abs() < 1e-12 && (b.half_l - 10.0).abs() < 1e-12);
        assert!((b.center - Vec2::new(5.0, 10.0)).length() < 1e-12);
    }

    #[test]
    fn rotated_square() {
        let pts = [
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(0.0, -1.0),
        ];
        let b = compute_obb(&pts).unwrap();
        assert!((b.yaw - FRAC_PI_4).abs() < 1e-12);
        assert!((b.half_w - b.half_l).abs() < 1e-12);
        assert!((b.area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_and_empty() {
        let b = compute_obb(&[Vec2::new(3.0, 4.0)]).unwrap();
        assert_eq!((b.half_w, b.half_l), (0.0, 0.0));
        assert_eq!(b.center, Vec2::new(3.0, 4.0));
        assert_eq!(compute_obb(&[]), Err(GeometryError::EmptyInput));
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 2.0),
        ];
        assert_eq!(convex_hull(&pts).len(), 4);
    }
}
