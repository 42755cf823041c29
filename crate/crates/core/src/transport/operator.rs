use std::f64::consts::PI;

use crate::domain::{BoundaryKind, Grid, STREAMWISE};

#[derive(Clone, Copy)]
enum Row {
    Interior,
    LeftWall,
    RightWall,
}

struct Axis {
    n: usize,
    stride: usize,
    outer: usize,
    inv2h: f64,
    inv4h: f64,
    invh2: f64,
    periodic: bool,
}

/// Advection-diffusion right-hand side `sign * adv(u) c + nu * lap c`.
///
/// Advection is in skew-symmetric form `(D(u c) + u D c) / 2` with central
/// differences inside and the one-sided closure `D c = (c_1 - c_0) / h` at
/// walls; diffusion uses a mirrored ghost node at walls (zero flux). Under
/// the grid quadrature weights the advection matrix is antisymmetric when the
/// wall-normal velocity vanishes, and the diffusion matrix is symmetric, so
/// `sign = -1` and `sign = +1` are exact transposes of each other.
pub(crate) struct Kernel {
    axes: Vec<Axis>,
    len: usize,
    nu: f64,
}

impl Kernel {
    pub(crate) fn new(grid: &Grid, nu: f64) -> Self {
        let axes = (0..grid.ndim())
            .map(|a| {
                let n = grid.dims()[a];
                let stride = grid.strides()[a];
                let h = grid.spacing()[a];
                Axis {
                    n,
                    stride,
                    outer: grid.len() / (n * stride),
                    inv2h: 0.5 / h,
                    inv4h: 0.25 / h,
                    invh2: 1.0 / (h * h),
                    periodic: grid.boundary()[a] == BoundaryKind::Periodic,
                }
            })
            .collect();
        Self {
            axes,
            len: grid.len(),
            nu,
        }
    }

    /// `out = sign * adv(vel) c + nu * lap c`. `vel` is component-major.
    pub(crate) fn apply(&self, vel: &[f64], sign: f64, c: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let nu = self.nu;
        for (a, ax) in self.axes.iter().enumerate() {
            let u = &vel[a * self.len..(a + 1) * self.len];
            let s = ax.stride;
            let n = ax.n;
            for o in 0..ax.outer {
                let base = o * n * s;
                for i in 0..n {
                    let (im, ip, row) = if ax.periodic {
                        ((i + n - 1) % n, (i + 1) % n, Row::Interior)
                    } else if i == 0 {
                        (0, 1, Row::LeftWall)
                    } else if i == n - 1 {
                        (n - 2, n - 1, Row::RightWall)
                    } else {
                        (i - 1, i + 1, Row::Interior)
                    };
                    let r0 = base + i * s;
                    let rm = base + im * s;
                    let rp = base + ip * s;
                    for k in 0..s {
                        let (j, jm, jp) = (r0 + k, rm + k, rp + k);
                        let (adv, lap) = match row {
                            Row::Interior => (
                                ((u[j] + u[jp]) * c[jp] - (u[j] + u[jm]) * c[jm]) * ax.inv4h,
                                (c[jp] - 2.0 * c[j] + c[jm]) * ax.invh2,
                            ),
                            Row::LeftWall => (
                                ((u[j] + u[jp]) * c[jp] - 2.0 * u[j] * c[j]) * ax.inv2h,
                                2.0 * (c[jp] - c[j]) * ax.invh2,
                            ),
                            Row::RightWall => (
                                (2.0 * u[j] * c[j] - (u[j] + u[jm]) * c[jm]) * ax.inv2h,
                                2.0 * (c[jm] - c[j]) * ax.invh2,
                            ),
                        };
                        out[j] += sign * adv + nu * lap;
                    }
                }
            }
        }
    }
}

/// Per-step damping factors `exp(-rate * dt * ramp(x))`, where the ramp rises
/// as a half cosine from 0 at `sponge_width` inside either streamwise end to
/// 1 at the end itself.
pub fn sponge_mask(grid: &Grid, rate: f64, dt: f64) -> Vec<f64> {
    let width = grid.sponge_width();
    if width <= 0.0 || rate <= 0.0 {
        return vec![1.0; grid.len()];
    }
    let x0 = grid.origin()[STREAMWISE];
    let lx = grid.extent()[STREAMWISE];
    let nx = grid.dims()[STREAMWISE];
    let sx = grid.strides()[STREAMWISE];
    let mut mask = vec![1.0; grid.len()];
    for i in 0..nx {
        let x = grid.coord(STREAMWISE, i) - x0;
        let d = x.min(lx - x);
        if d >= width {
            continue;
        }
        let ramp = 0.5 * (1.0 + (PI * d / width).cos());
        let f = (-rate * dt * ramp).exp();
        for k in i * sx..(i + 1) * sx {
            mask[k] = f;
        }
    }
    mask
}
