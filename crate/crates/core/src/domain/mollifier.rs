use std::f64::consts::PI;
use std::sync::Arc;

use super::field::ScalarField;
use super::grid::{BoundaryKind, Grid};
use crate::error::{Error, Result};

/// Support radius in units of the e-folding radius `1/sqrt(beta)`.
pub const SUPPORT_EFOLDINGS: f64 = 4.0;

/// Default Gaussian standard deviation, in units of the largest grid spacing.
pub const DEFAULT_SIGMA_CELLS: f64 = 1.5;

/// Minimum e-folding radius, in units of the largest grid spacing.
pub const MIN_EFOLDING_CELLS: f64 = 1.5;

/// Normalized steep Gaussian standing in for a Dirac delta.
///
/// Nodal values are `exp(-beta r^2) - exp(-beta R^2)` inside the support
/// radius `R = 4 / sqrt(beta)` and zero outside, divided by their discrete
/// integral so the quadrature of the mollifier is exactly one. The shift by
/// the value at `R` keeps the profile continuous where it is truncated, which
/// keeps sensitivities with respect to the center smooth.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifiedDelta {
    center: Vec<f64>,
    beta: f64,
    support_radius: f64,
}

impl MollifiedDelta {
    pub fn new(grid: &Grid, center: &[f64], beta: f64) -> Result<Self> {
        check_beta(grid, beta)?;
        let center = grid.wrap_point(center)?;
        Ok(Self {
            center,
            beta,
            support_radius: SUPPORT_EFOLDINGS / beta.sqrt(),
        })
    }

    /// Sharpness giving a standard deviation of 1.5 of the largest grid spacing.
    pub fn default_beta(grid: &Grid) -> f64 {
        let sigma = DEFAULT_SIGMA_CELLS * grid.max_spacing();
        1.0 / (2.0 * sigma * sigma)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Peak value of the unnormalized continuous Gaussian, `(beta/pi)^(d/2)`.
    pub fn peak(&self) -> f64 {
        (self.beta / PI).powf(self.center.len() as f64 / 2.0)
    }

    pub fn stencil(&self, grid: &Grid) -> Stencil {
        self.build(grid, &[])
    }

    /// Stencil that also carries derivatives of the weights with respect to
    /// the center coordinates along `axes`.
    pub fn stencil_with_gradient(&self, grid: &Grid, axes: &[usize]) -> Stencil {
        self.build(grid, axes)
    }

    fn build(&self, grid: &Grid, axes: &[usize]) -> Stencil {
        let ndim = grid.ndim();
        let r = self.support_radius;
        let cutoff = (-self.beta * r * r).exp();

        // Candidate (index, offset) pairs per axis.
        let per_axis: Vec<Vec<(usize, f64)>> = (0..ndim)
            .map(|a| axis_candidates(grid, a, self.center[a], r))
            .collect();

        let mut nodes = Vec::new();
        let mut gauss = Vec::new();
        let mut offsets: Vec<[f64; 3]> = Vec::new();
        let strides = grid.strides();
        let mut cursor = [0usize; 3];
        'outer: loop {
            let mut r2 = 0.0;
            let mut idx = 0;
            let mut off = [0.0; 3];
            for a in 0..ndim {
                let (i, d) = per_axis[a][cursor[a]];
                idx += i * strides[a];
                off[a] = d;
                r2 += d * d;
            }
            if r2 < r * r {
                let e = (-self.beta * r2).exp();
                nodes.push(idx);
                gauss.push(e - cutoff);
                offsets.push(off);
            }
            // Odometer over the candidate box.
            for a in (0..ndim).rev() {
                cursor[a] += 1;
                if cursor[a] < per_axis[a].len() {
                    continue 'outer;
                }
                cursor[a] = 0;
            }
            break;
        }

        let w = grid.weights();
        let z: f64 = nodes.iter().zip(&gauss).map(|(&i, g)| w[i] * g).sum();
        let density: Vec<f64> = gauss.iter().map(|g| g / z).collect();
        let quad: Vec<f64> = nodes.iter().zip(&density).map(|(&i, d)| w[i] * d).collect();

        // d/dc_a of exp(-beta |x - c|^2) is 2 beta (x_a - c_a) exp(...).
        let n = nodes.len();
        let mut d_quad = Vec::with_capacity(axes.len() * n);
        for &a in axes {
            let dg: Vec<f64> = (0..n)
                .map(|k| {
                    let r2: f64 = offsets[k][..ndim].iter().map(|d| d * d).sum();
                    2.0 * self.beta * offsets[k][a] * (-self.beta * r2).exp()
                })
                .collect();
            let dz: f64 = nodes.iter().zip(&dg).map(|(&i, g)| w[i] * g).sum();
            for k in 0..n {
                let dd = dg[k] / z - gauss[k] * dz / (z * z);
                d_quad.push(w[nodes[k]] * dd);
            }
        }

        Stencil {
            nodes,
            density,
            quad,
            d_quad,
            grad_axes: axes.len(),
        }
    }
}

fn check_beta(grid: &Grid, beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    let efold = 1.0 / beta.sqrt();
    let needed = MIN_EFOLDING_CELLS * grid.max_spacing();
    if efold < needed * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "e-folding radius {efold:.4} is below {MIN_EFOLDING_CELLS} cells ({needed:.4})"
        )));
    }
    Ok(())
}

fn axis_candidates(grid: &Grid, axis: usize, c: f64, r: f64) -> Vec<(usize, f64)> {
    let n = grid.dims()[axis];
    let h = grid.spacing()[axis];
    let lo = grid.origin()[axis];
    let first = ((c - r - lo) / h).floor() as i64;
    let last = ((c + r - lo) / h).ceil() as i64;
    match grid.boundary()[axis] {
        BoundaryKind::Periodic => {
            let count = ((last - first + 1) as usize).min(n);
            // Centered window when the support wraps the whole axis.
            let start = if count == n {
                ((c - lo) / h).round() as i64 - (n as i64) / 2
            } else {
                first
            };
            (0..count as i64)
                .map(|k| {
                    let i = (start + k).rem_euclid(n as i64) as usize;
                    (i, grid.offset(axis, grid.coord(axis, i), c))
                })
                .collect()
        }
        BoundaryKind::Wall => {
            let a = first.max(0) as usize;
            let b = (last.min(n as i64 - 1)) as usize;
            (a..=b).map(|i| (i, grid.coord(axis, i) - c)).collect()
        }
    }
}

/// Sparse nodal representation of a mollified delta.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    nodes: Vec<usize>,
    density: Vec<f64>,
    quad: Vec<f64>,
    d_quad: Vec<f64>,
    grad_axes: usize,
}

impl Stencil {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Nodal values of the delta density (integrate to one).
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Mollified sample `<delta, f>` of a nodal field.
    #[inline]
    pub fn sample(&self, values: &[f64]) -> f64 {
        self.nodes
            .iter()
            .zip(&self.quad)
            .map(|(&i, q)| q * values[i])
            .sum()
    }

    /// Add `coef * delta` to a nodal field.
    #[inline]
    pub fn inject(&self, coef: f64, out: &mut [f64]) {
        for (&i, d) in self.nodes.iter().zip(&self.density) {
            out[i] += coef * d;
        }
    }

    /// Derivative of `<delta, f>` with respect to the center coordinate along
    /// the `k`-th gradient axis the stencil was built with.
    pub fn sample_gradient(&self, k: usize, values: &[f64]) -> f64 {
        assert!(
            k < self.grad_axes,
            "stencil built without gradient axis {k}"
        );
        let n = self.nodes.len();
        self.nodes
            .iter()
            .zip(&self.d_quad[k * n..(k + 1) * n])
            .map(|(&i, q)| q * values[i])
            .sum()
    }

    pub fn gradient_axes(&self) -> usize {
        self.grad_axes
    }

    pub fn to_field(&self, grid: Arc<Grid>) -> ScalarField {
        let mut f = ScalarField::zeros(grid);
        self.inject(1.0, f.values_mut());
        f
    }
}

/// Nodal field of a mollified delta centred at `center`.
pub fn gaussian_bump(grid: &Arc<Grid>, center: &[f64], beta: f64) -> Result<ScalarField> {
    let delta = MollifiedDelta::new(grid, center, beta)?;
    Ok(delta.stencil(grid).to_field(Arc::clone(grid)))
}
