use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Streamwise axis index. Sponge zones and the fixed sensing-plane
/// coordinate live on this axis.
pub const STREAMWISE: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Periodic,
    #[serde(alias = "no-flux-wall")]
    Wall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: Vec<usize>,
    pub extent: Vec<f64>,
    pub origin: Vec<f64>,
    pub boundary: Vec<BoundaryKind>,
    #[serde(default)]
    pub sponge_width: f64,
}

impl GridConfig {
    /// Periodic streamwise axis followed by a wall-bounded axis spanning `[-1, 1]`.
    pub fn channel_2d(nx: usize, ny: usize, length: f64, x0: f64, sponge_width: f64) -> Self {
        Self {
            dims: vec![nx, ny],
            extent: vec![length, 2.0],
            origin: vec![x0, -1.0],
            boundary: vec![BoundaryKind::Periodic, BoundaryKind::Wall],
            sponge_width,
        }
    }
}

/// Rectangular structured mesh. Nodal arrays are stored row-major with the
/// last axis varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    extent: Vec<f64>,
    boundary: Vec<BoundaryKind>,
    sponge_width: f64,
    strides: Vec<usize>,
    len: usize,
    axis_weights: Vec<Vec<f64>>,
    node_weights: Vec<f64>,
}

/// Discretize a rectangular domain.
pub fn make_grid(config: &GridConfig) -> Result<Grid> {
    Grid::new(config)
}

impl Grid {
    pub fn new(config: &GridConfig) -> Result<Self> {
        let ndim = config.dims.len();
        if ndim == 0 || ndim > 3 {
            return Err(Error::Config(format!(
                "grid must have 1 to 3 axes, got {ndim}"
            )));
        }
        if config.extent.len() != ndim
            || config.origin.len() != ndim
            || config.boundary.len() != ndim
        {
            return Err(Error::Config(
                "dims, extent, origin and boundary must have one entry per axis".into(),
            ));
        }
        for (axis, (&n, &ext)) in config.dims.iter().zip(&config.extent).enumerate() {
            if n < 4 {
                return Err(Error::Config(format!(
                    "axis {axis}: need at least 4 nodes, got {n}"
                )));
            }
            if !(ext.is_finite() && ext > 0.0) {
                return Err(Error::Config(format!(
                    "axis {axis}: extent must be positive, got {ext}"
                )));
            }
            if !config.origin[axis].is_finite() {
                return Err(Error::Config(format!("axis {axis}: origin is not finite")));
            }
        }
        let sponge = config.sponge_width;
        if !(sponge.is_finite() && sponge >= 0.0) {
            return Err(Error::Config(format!(
                "sponge width must be non-negative, got {sponge}"
            )));
        }
        if sponge > 0.0 {
            if config.boundary[STREAMWISE] != BoundaryKind::Periodic {
                return Err(Error::Config(
                    "sponge requires a periodic streamwise axis".into(),
                ));
            }
            if sponge >= 0.1 * config.extent[STREAMWISE] {
                return Err(Error::Config(format!(
                    "sponge width {sponge} must be below 10% of the streamwise extent {}",
                    config.extent[STREAMWISE]
                )));
            }
        }

        let spacing: Vec<f64> = (0..ndim)
            .map(|a| match config.boundary[a] {
                BoundaryKind::Periodic => config.extent[a] / config.dims[a] as f64,
                BoundaryKind::Wall => config.extent[a] / (config.dims[a] - 1) as f64,
            })
            .collect();

        let mut strides = vec![1usize; ndim];
        for a in (0..ndim - 1).rev() {
            strides[a] = strides[a + 1] * config.dims[a + 1];
        }
        let len = config.dims.iter().product();

        // Uniform weights on periodic axes, trapezoidal on wall axes.
        let axis_weights: Vec<Vec<f64>> = (0..ndim)
            .map(|a| {
                let n = config.dims[a];
                let h = spacing[a];
                (0..n)
                    .map(|i| match config.boundary[a] {
                        BoundaryKind::Wall if i == 0 || i == n - 1 => 0.5 * h,
                        _ => h,
                    })
                    .collect()
            })
            .collect();

        let mut node_weights = vec![1.0; len];
        for (idx, w) in node_weights.iter_mut().enumerate() {
            let mut rem = idx;
            for a in 0..ndim {
                let i = rem / strides[a];
                rem %= strides[a];
                *w *= axis_weights[a][i];
            }
        }

        Ok(Self {
            dims: config.dims.clone(),
            spacing,
            origin: config.origin.clone(),
            extent: config.extent.clone(),
            boundary: config.boundary.clone(),
            sponge_width: sponge,
            strides,
            len,
            axis_weights,
            node_weights,
        })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn boundary(&self) -> &[BoundaryKind] {
        &self.boundary
    }

    pub fn sponge_width(&self) -> f64 {
        self.sponge_width
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    /// Quadrature weight of every node (product of per-axis weights).
    pub fn weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.axis_weights[axis]
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    /// First wall-bounded axis, if any.
    pub fn wall_axis(&self) -> Option<usize> {
        self.boundary.iter().position(|&b| b == BoundaryKind::Wall)
    }

    /// Coordinate of node `i` on `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        match self.boundary[axis] {
            BoundaryKind::Periodic => self.origin[axis] + i as f64 * self.spacing[axis],
            // Exact endpoints: the last node sits on origin + extent.
            BoundaryKind::Wall => {
                self.origin[axis] + self.extent[axis] * (i as f64 / (self.dims[axis] - 1) as f64)
            }
        }
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.dims[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in 0..self.ndim() {
            out[a] = idx / self.strides[a];
            idx %= self.strides[a];
        }
        out
    }

    pub fn node_point(&self, idx: usize) -> Vec<f64> {
        let m = self.unravel(idx);
        (0..self.ndim()).map(|a| self.coord(a, m[a])).collect()
    }

    /// Map a point into the canonical domain: periodic axes wrap, wall axes
    /// must already lie within the extent.
    pub fn wrap_point(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.ndim() {
            return Err(Error::Shape(format!(
                "point has {} coordinates, grid has {} axes",
                point.len(),
                self.ndim()
            )));
        }
        let mut out = Vec::with_capacity(point.len());
        for (a, &x) in point.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Placement(format!("coordinate {a} is not finite")));
            }
            let lo = self.origin[a];
            let ext = self.extent[a];
            match self.boundary[a] {
                BoundaryKind::Periodic => out.push(lo + (x - lo).rem_euclid(ext)),
                BoundaryKind::Wall => {
                    let tol = 1e-12 * ext;
                    if x < lo - tol || x > lo + ext + tol {
                        return Err(Error::Placement(format!(
                            "coordinate {x} on axis {a} is outside [{lo}, {}]",
                            lo + ext
                        )));
                    }
                    out.push(x.clamp(lo, lo + ext));
                }
            }
        }
        Ok(out)
    }

    /// Signed offset `x - center` on `axis`, using the nearest periodic image.
    pub fn offset(&self, axis: usize, x: f64, center: f64) -> f64 {
        let d = x - center;
        match self.boundary[axis] {
            BoundaryKind::Periodic => {
                let ext = self.extent[axis];
                d - ext * (d / ext).round()
            }
            BoundaryKind::Wall => d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_spacing() {
        let g = Grid::new(&GridConfig {
            dims: vec![8, 4],
            extent: vec![2.0 * PI, 1.0],
            origin: vec![0.0, 0.0],
            boundary: vec![BoundaryKind::Periodic, BoundaryKind::Periodic],
            sponge_width: 0.0,
        })
        .unwrap();
        assert!((g.spacing()[0] - PI / 4.0).abs() < 1e-15);
        assert_eq!(g.len(), 32);
        assert!((g.coord(0, 7) - 7.0 * PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn wall_nodes_span_extent() {
        let g = Grid::new(&GridConfig::channel_2d(4, 5, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(g.spacing()[1], 0.5);
        assert_eq!(g.axis_coords(1), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn too_few_nodes_rejected() {
        let err = Grid::new(&GridConfig::channel_2d(2, 8, 1.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = Grid::new(&GridConfig::channel_2d(8, 2, 1.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn non_positive_extent_rejected() {
        let mut cfg = GridConfig::channel_2d(8, 8, 1.0, 0.0, 0.0);
        cfg.extent[0] = 0.0;
        assert!(matches!(Grid::new(&cfg), Err(Error::Config(_))));
        cfg.extent[0] = -3.0;
        assert!(matches!(Grid::new(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn sponge_limited_to_ten_percent() {
        let cfg = GridConfig::channel_2d(16, 8, 10.0, 0.0, 1.0);
        assert!(Grid::new(&cfg).is_err());
        let cfg = GridConfig::channel_2d(16, 8, 10.0, 0.0, 0.99);
        assert!(Grid::new(&cfg).is_ok());
    }

    #[test]
    fn weights_integrate_volume() {
        let g = Grid::new(&GridConfig::channel_2d(12, 9, 3.0, 0.0, 0.0)).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - g.volume()).abs() < 1e-12);
    }

    #[test]
    fn wrap_and_placement() {
        let g = Grid::new(&GridConfig::channel_2d(16, 9, 4.0, 0.0, 0.0)).unwrap();
        let p = g.wrap_point(&[5.0, 0.5]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-14);
        assert!(matches!(
            g.wrap_point(&[1.0, 1.5]),
            Err(Error::Placement(_))
        ));
        assert!((g.offset(0, 3.9, 0.1) + 0.2).abs() < 1e-12);
    }
}
