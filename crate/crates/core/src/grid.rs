//! Row-major raster grids and the pixel ↔ map-meter frame.

use crate::math::Vec2;

/// Row-major grid indexed by `(x, y)` = `(column, row)`; row 0 is the top
/// (northern) edge of the map image.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type Mask = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == width * height).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Copy + Default> Grid<T> {
    /// Value at `(x, y)`, or `T::default()` outside the grid.
    pub fn get_or_default(&self, x: i64, y: i64) -> T {
        if self.in_bounds(x, y) {
            *self.get(x as usize, y as usize)
        } else {
            T::default()
        }
    }
}

impl Grid<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn none(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Mask pixels with at least one 4-neighbour outside the mask (or the grid).
    pub fn boundary_pixel_count(&self) -> usize {
        self.ones()
            .filter(|&(x, y)| {
                let (x, y) = (x as i64, y as i64);
                [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|(dx, dy)| !self.get_or_default(x + dx, y + dy))
            })
            .count()
    }
}

/// Placement of a raster in map meters: origin at the bottom-left image
/// corner, `x` along columns, `y` against rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapFrame {
    pub width: usize,
    pub height: usize,
    pub meters_per_pixel: f64,
}

impl MapFrame {
    pub fn new(width: usize, height: usize, meters_per_pixel: f64) -> Self {
        Self {
            width,
            height,
            meters_per_pixel,
        }
    }

    pub fn for_grid<T>(grid: &Grid<T>, meters_per_pixel: f64) -> Self {
        Self::new(grid.width(), grid.height(), meters_per_pixel)
    }

    pub fn extent(&self) -> Vec2 {
        Vec2::new(
            self.width as f64 * self.meters_per_pixel,
            self.height as f64 * self.meters_per_pixel,
        )
    }

    /// Map position of a pixel-grid corner `(cx, cy)`, `0 ≤ cx ≤ width`.
    pub fn corner(&self, cx: f64, cy: f64) -> Vec2 {
        Vec2::new(
            cx * self.meters_per_pixel,
            (self.height as f64 - cy) * self.meters_per_pixel,
        )
    }

    pub fn pixel_center(&self, x: usize, y: usize) -> Vec2 {
        self.corner(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// Continuous pixel coordinates (column, row) of a map point, where
    /// integer values are pixel corners.
    pub fn to_pixel_coords(&self, p: Vec2) -> (f64, f64) {
        (
            p.x / self.meters_per_pixel,
            self.height as f64 - p.y / self.meters_per_pixel,
        )
    }

    /// Pixel containing `p`, if inside the map.
    pub fn pixel_at(&self, p: Vec2) -> Option<(usize, usize)> {
        let (cx, cy) = self.to_pixel_coords(p);
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        let (x, y) = (cx.floor() as usize, cy.floor() as usize);
        (x < self.width && y < self.height).then_some((x, y))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let e = self.extent();
        p.x >= 0.0 && p.y >= 0.0 && p.x <= e.x && p.y <= e.y
    }
}
