//! Uniform 2D lattice shared by the intensity maps and the belief grid.

/// A uniform 2D grid: `nx * ny` nodes, node `(ix, iy)` at
/// `origin + resolution * (ix, iy)`.
///
/// Linear indexing is row-major with `ix` fastest: `i = iy * nx + ix`.
/// Wherever a tie-break on grid cells is needed, the smallest linear index
/// wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid covering `[min, max]` in both axes at the given resolution,
    /// node count `floor(extent / resolution) + 1` per axis.
    pub fn covering(min: [f64; 2], max: [f64; 2], resolution: f64) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        let nx = ((max[0] - min[0]) / resolution).floor() as usize + 1;
        let ny = ((max[1] - min[1]) / resolution).floor() as usize + 1;
        GridSpec { origin: min, resolution, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.nx == 0 || self.ny == 0
    }

    pub fn node(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + self.resolution * ix as f64,
            self.origin[1] + self.resolution * iy as f64,
        ]
    }

    pub fn node_at(&self, i: usize) -> [f64; 2] {
        self.node(i % self.nx, i / self.nx)
    }

    /// Iterate node positions in linear-index order.
    pub fn nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.node_at(i))
    }

    /// True when `p` lies within the axis-aligned hull of the grid nodes.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let max_x = self.origin[0] + self.resolution * (self.nx - 1) as f64;
        let max_y = self.origin[1] + self.resolution * (self.ny - 1) as f64;
        p[0] >= self.origin[0] && p[0] <= max_x && p[1] >= self.origin[1] && p[1] <= max_y
    }
}

pub fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}
