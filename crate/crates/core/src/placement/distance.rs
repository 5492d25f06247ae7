use crate::grid::{Grid, MapFrame, Mask};
use crate::math::Vec2;

const FAR: f64 = 1e20;

/// Lower envelope of parabolas `(q - p)² + f[p]` (Felzenszwalb &
/// Huttenlocher), written into `out`.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let mut s;
        loop {
            let pf = v[k] as f64;
            s = ((f[q] + qf * qf) - (f[v[k]] + pf * pf)) / (2.0 * (qf - pf));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                break;
            }
        }
        if s <= z[k] {
            v[k] = q;
            z[k + 1] = f64::INFINITY;
        } else {
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
    }
    k = 0;
    for q in 0..n {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        out[q] = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance, in meters, from every pixel centre to the
/// nearest mask pixel centre. Mask pixels are 0; an empty mask yields
/// `+∞` everywhere.
pub fn distance_transform(mask: &Mask, meters_per_pixel: f64) -> Grid<f64> {
    let (w, h) = (mask.width(), mask.height());
    if mask.none() {
        return Grid::new(w, h, f64::INFINITY);
    }
    let mut sq = mask.map(|&b| if b { 0.0 } else { FAR });
    let n = w.max(h);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..w {
        for y in 0..h {
            f[y] = *sq.get(x, y);
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            sq.set(x, y, out[y]);
        }
    }
    for y in 0..h {
        for x in 0..w {
            f[x] = *sq.get(x, y);
        }
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        for x in 0..w {
            sq.set(x, y, out[x]);
        }
    }
    sq.map(|&d| d.sqrt() * meters_per_pixel)
}

/// Bilinear interpolation of a per-pixel field at a map point, with pixel
/// values anchored at pixel centres and clamped at the border.
pub fn sample_bilinear(field: &Grid<f64>, frame: &MapFrame, p: Vec2) -> f64 {
    let (cx, cy) = frame.to_pixel_coords(p);
    let maxx = (field.width() - 1) as f64;
    let maxy = (field.height() - 1) as f64;
    let fx = (cx - 0.5).clamp(0.0, maxx);
    let fy = (cy - 0.5).clamp(0.0, maxy);
    let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(field.width() - 1), (y0 + 1).min(field.height() - 1));
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let top = *field.get(x0, y0) * (1.0 - tx) + *field.get(x1, y0) * tx;
    let bottom = *field.get(x0, y1) * (1.0 - tx) + *field.get(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(mask: &Mask, mpp: f64) -> Grid<f64> {
        let pts: Vec<(usize, usize)> = mask.ones().collect();
        Grid::from_fn(mask.width(), mask.height(), |x, y| {
            pts.iter()
                .map(|&(px, py)| {
                    let (dx, dy) = (px as f64 - x as f64, py as f64 - y as f64);
                    (dx * dx + dy * dy).sqrt() * mpp
                })
                .fold(f64::INFINITY, f64::min)
        })
    }

    #[test]
    fn single_pixel() {
        let mut m = Grid::new(5, 5, false);
        m.set(2, 2, true);
        let d = distance_transform(&m, 2.0);
        assert_eq!(*d.get(2, 2), 0.0);
        assert_eq!(*d.get(2, 1), 2.0);
        assert_eq!(*d.get(3, 2), 2.0);
        assert!((*d.get(3, 3) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_is_infinite() {
        let d = distance_transform(&Grid::new(3, 4, false), 1.0);
        assert!(d.data().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn strip_centerline() {
        let strip = Grid::from_fn(20, 11, |_, y| (3..8).contains(&y));
        let complement = strip.map(|&b| !b);
        let d = distance_transform(&complement, 1.0);
        for x in 0..20 {
            assert_eq!(*d.get(x, 5), 3.0);
        }
        // the centre row sits 2 px from the strip's own edge rows
        let edges = Grid::from_fn(20, 11, |_, y| y == 3 || y == 7);
        assert_eq!(*distance_transform(&edges, 1.0).get(4, 5), 2.0);
    }

    #[test]
    fn matches_brute_force() {
        let mut state = 12345u64;
        for _ in 0..10 {
            let m = Grid::from_fn(23, 17, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 60) == 0
            });
            let fast = distance_transform(&m, 1.5);
            let slow = brute(&m, 1.5);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-9 || (a.is_infinite() && b.is_infinite()));
            }
        }
    }

    #[test]
    fn bilinear_at_centres() {
        let g = Grid::from_fn(4, 3, |x, y| (x + 10 * y) as f64);
        let f = MapFrame::new(4, 3, 2.0);
        assert_eq!(sample_bilinear(&g, &f, f.pixel_center(2, 1)), 12.0);
        let mid = (f.pixel_center(1, 1) + f.pixel_center(2, 1)) * 0.5;
        assert!((sample_bilinear(&g, &f, mid) - 11.5).abs() < 1e-12);
    }
}
