use std::sync::Arc;

use super::operator::{sponge_mask, Kernel};
use crate::domain::{BoundaryKind, Grid, ScalarField, Stencil};
use crate::error::{Error, Result};
use crate::time::TimeAxis;
use crate::velocity::VelocitySeries;

/// Advective Courant limit of the explicit scheme.
pub const MAX_COURANT: f64 = 0.5;
/// Diffusion-number limit `dt * nu * sum_a 1/h_a^2`.
pub const MAX_DIFFUSION_NUMBER: f64 = 0.25;
/// Default sponge damping rate.
pub const DEFAULT_SPONGE_RATE: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Physical time, advection by `+u`.
    Forward,
    /// Transposed update marched from `t_{n+1}` back to `t_n`.
    Reverse,
}

enum Sampling {
    /// Solver step `n` reads snapshot `n * ratio`.
    Aligned(usize),
    Resampled(Vec<Vec<f64>>),
}

/// Everything a transport solve needs besides sources and sensors.
pub struct TransportProblem {
    grid: Arc<Grid>,
    velocity: Arc<VelocitySeries>,
    pe: f64,
    time: TimeAxis,
    sponge: Vec<f64>,
    kernel: Kernel,
    sampling: Sampling,
}

impl TransportProblem {
    pub fn new(velocity: Arc<VelocitySeries>, pe: f64, time: TimeAxis) -> Result<Self> {
        Self::with_sponge_rate(velocity, pe, time, DEFAULT_SPONGE_RATE)
    }

    pub fn with_sponge_rate(
        velocity: Arc<VelocitySeries>,
        pe: f64,
        time: TimeAxis,
        sponge_rate: f64,
    ) -> Result<Self> {
        if !(pe > 0.0 && pe.is_finite()) {
            return Err(Error::Config(format!("Pe must be positive, got {pe}")));
        }
        let grid = Arc::clone(velocity.grid());
        let dt = time.dt();
        let courant = velocity.courant(dt);
        if courant > MAX_COURANT * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {dt:.3e} gives advective Courant number {courant:.3} > {MAX_COURANT}"
            )));
        }
        let diff = diffusion_number(&grid, 1.0 / pe, dt);
        if diff > MAX_DIFFUSION_NUMBER {
            return Err(Error::Config(format!(
                "dt = {dt:.3e} gives diffusion number {diff:.3} > {MAX_DIFFUSION_NUMBER}"
            )));
        }
        if velocity.last_time() < time.horizon() * (1.0 - 1e-9) {
            return Err(Error::Coverage {
                time: time.horizon(),
                last: velocity.last_time(),
            });
        }
        check_wall_normal(&velocity)?;

        let ratio = dt / velocity.dt();
        let sampling = if (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0 {
            Sampling::Aligned(ratio.round() as usize)
        } else {
            Sampling::Resampled(
                (0..time.len())
                    .map(|n| velocity.at_time(time.time(n)).map(|v| v.into_owned()))
                    .collect::<Result<_>>()?,
            )
        };
        Ok(Self {
            kernel: Kernel::new(&grid, 1.0 / pe),
            sponge: sponge_mask(&grid, sponge_rate, dt),
            grid,
            velocity,
            pe,
            time,
            sampling,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn velocity(&self) -> &Arc<VelocitySeries> {
        &self.velocity
    }

    pub fn pe(&self) -> f64 {
        self.pe
    }

    pub fn time(&self) -> &TimeAxis {
        &self.time
    }

    pub fn dt(&self) -> f64 {
        self.time.dt()
    }

    pub fn sponge(&self) -> &[f64] {
        &self.sponge
    }

    pub fn courant(&self) -> f64 {
        self.velocity.courant(self.dt())
    }

    pub fn diffusion_number(&self) -> f64 {
        diffusion_number(&self.grid, 1.0 / self.pe, self.dt())
    }

    /// Velocity at solver step `n`.
    pub fn velocity_at_step(&self, n: usize) -> &[f64] {
        match &self.sampling {
            Sampling::Aligned(r) => self.velocity.snapshot(n * r),
            Sampling::Resampled(v) => &v[n],
        }
    }

    pub(crate) fn rhs(&self, n: usize, sign: f64, c: &[f64], out: &mut [f64]) {
        self.kernel.apply(self.velocity_at_step(n), sign, c, out);
    }

    pub(crate) fn check_finite(&self, state: &[f64], n: usize) -> Result<()> {
        if state.iter().all(|v| v.is_finite()) {
            return Ok(());
        }
        Err(Error::Instability(format!(
            "non-finite state at step {n}: Courant number {:.3} (limit {MAX_COURANT}), \
             diffusion number {:.3} (limit {MAX_DIFFUSION_NUMBER})",
            self.courant(),
            self.diffusion_number()
        )))
    }
}

fn diffusion_number(grid: &Grid, nu: f64, dt: f64) -> f64 {
    dt * nu * grid.spacing().iter().map(|h| 1.0 / (h * h)).sum::<f64>()
}

/// Exact transposition needs zero normal velocity on every wall.
fn check_wall_normal(series: &VelocitySeries) -> Result<()> {
    let grid = series.grid();
    for a in 0..grid.ndim() {
        if grid.boundary()[a] != BoundaryKind::Wall {
            continue;
        }
        let n = grid.dims()[a];
        for k in 0..series.len() {
            let u = series.component(k, a);
            for (idx, v) in u.iter().enumerate() {
                let i = grid.unravel(idx)[a];
                if (i == 0 || i == n - 1) && v.abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "velocity component {a} is {v} on a wall in snapshot {k}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Scratch buffers for one time step.
pub(crate) struct Workspace {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub tmp: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// Nodal source shape added to the right-hand side with a per-step amplitude.
#[derive(Clone, Copy)]
pub(crate) enum Shape<'a> {
    Sparse(&'a Stencil),
    Dense(&'a [f64]),
}

impl Shape<'_> {
    fn add(self, amp: f64, out: &mut [f64]) {
        if amp == 0.0 {
            return;
        }
        match self {
            Shape::Sparse(s) => s.inject(amp, out),
            Shape::Dense(d) => {
                for (o, v) in out.iter_mut().zip(d) {
                    *o += amp * v;
                }
            }
        }
    }
}

/// One forward step from `t_n` to `t_{n+1}` (Heun's method with velocities
/// at both ends, then the sponge):
/// `k1 = L_n c + q_n`, `k2 = L_{n+1}(c + dt k1) + q_{n+1}`,
/// `c <- S (c + dt/2 (k1 + k2))`.
pub(crate) fn forward_step(
    p: &TransportProblem,
    n: usize,
    c: &mut [f64],
    q: Option<(Shape<'_>, f64, f64)>,
    ws: &mut Workspace,
) {
    let dt = p.dt();
    p.rhs(n, -1.0, c, &mut ws.k1);
    if let Some((shape, q0, _)) = q {
        shape.add(q0, &mut ws.k1);
    }
    for ((t, x), k) in ws.tmp.iter_mut().zip(c.iter()).zip(&ws.k1) {
        *t = x + dt * k;
    }
    p.rhs(n + 1, -1.0, &ws.tmp, &mut ws.k2);
    if let Some((shape, _, q1)) = q {
        shape.add(q1, &mut ws.k2);
    }
    for (((x, a), b), s) in c.iter_mut().zip(&ws.k1).zip(&ws.k2).zip(&p.sponge) {
        *x = s * (*x + 0.5 * dt * (a + b));
    }
}

/// Transposed step from `t_{n+1}` back to `t_n` on an adjoint density `mu`:
/// `v = S mu`, `v~ = v + dt L*_{n+1} v`, `mu <- v + dt/2 (L*_{n+1} v + L*_n v~)`.
/// Returns with `ws.tmp` holding `v~` and `ws.k2` holding `v`.
pub(crate) fn reverse_step(p: &TransportProblem, n: usize, mu: &mut [f64], ws: &mut Workspace) {
    let dt = p.dt();
    for (x, s) in mu.iter_mut().zip(&p.sponge) {
        *x *= s;
    }
    ws.k2.copy_from_slice(mu);
    p.rhs(n + 1, 1.0, mu, &mut ws.k1);
    for ((t, v), k) in ws.tmp.iter_mut().zip(mu.iter()).zip(&ws.k1) {
        *t = v + dt * k;
    }
    // mu = v + dt/2 k1 + dt/2 L*_n v~
    for (x, k) in mu.iter_mut().zip(&ws.k1) {
        *x += 0.5 * dt * k;
    }
    p.rhs(n, 1.0, &ws.tmp, &mut ws.k1);
    for (x, k) in mu.iter_mut().zip(&ws.k1) {
        *x += 0.5 * dt * k;
    }
}

/// Advance `state` by one step. `Forward` maps `t_n` to `t_{n+1}` with the
/// optional nodal sources at both ends; `Reverse` applies the transposed
/// update from `t_{n+1}` to `t_n` and ignores the sources.
pub fn step(
    problem: &TransportProblem,
    state: &ScalarField,
    n: usize,
    source: Option<(&ScalarField, &ScalarField)>,
    direction: Direction,
) -> Result<ScalarField> {
    if n >= problem.time().steps() {
        return Err(Error::Shape(format!(
            "step index {n} outside 0..{}",
            problem.time().steps()
        )));
    }
    let mut c = state.values().to_vec();
    let mut ws = Workspace::new(c.len());
    match direction {
        Direction::Forward => match source {
            None => forward_step(problem, n, &mut c, None, &mut ws),
            Some((q0, q1)) => {
                let d: Vec<f64> = q1
                    .values()
                    .iter()
                    .zip(q0.values())
                    .map(|(a, b)| a - b)
                    .collect();
                let dt = problem.dt();
                forward_step(
                    problem,
                    n,
                    &mut c,
                    Some((Shape::Dense(q0.values()), 1.0, 1.0)),
                    &mut ws,
                );
                // q_{n+1} only enters through dt/2 k2, so swap it in afterwards.
                for ((x, dv), s) in c.iter_mut().zip(&d).zip(problem.sponge()) {
                    *x += s * 0.5 * dt * dv;
                }
            }
        },
        Direction::Reverse => reverse_step(problem, n, &mut c, &mut ws),
    }
    problem.check_finite(&c, n)?;
    ScalarField::from_values(Arc::clone(problem.grid()), c)
}
