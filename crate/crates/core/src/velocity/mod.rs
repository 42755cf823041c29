//! Divergence-free velocity snapshots on the solver time axis.

mod io;
mod synth;

use std::borrow::Cow;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{central_derivative, Grid};
use crate::error::{Error, Result};

pub use io::{load_series, read_series, store_series, write_series};
pub use synth::{mean_profile, synthesize_velocity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    Uniform,
    #[serde(alias = "parabolic")]
    ParabolicChannel,
    #[serde(alias = "frozen-fourier-turbulence")]
    FrozenFourier,
    StoredSeries,
}

fn default_pe() -> f64 {
    150.0
}

fn default_re_tau() -> f64 {
    150.0
}

fn default_modes() -> usize {
    12
}

/// Parameters of a velocity provider, in friction-velocity units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityProviderSpec {
    pub kind: ProviderKind,
    /// Centreline speed of the mean profile (uniform speed for `uniform`).
    pub centerline_speed: f64,
    /// Convection speed of the perturbation modes; bulk speed of the mean
    /// profile when omitted.
    #[serde(default)]
    pub mean_speed: Option<f64>,
    /// Target rms of the cross-stream perturbation velocity.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pe")]
    pub pe: f64,
    #[serde(default = "default_re_tau")]
    pub re_tau: f64,
    /// Series file for `stored-series`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl VelocityProviderSpec {
    pub fn uniform(speed: f64) -> Self {
        Self {
            kind: ProviderKind::Uniform,
            centerline_speed: speed,
            mean_speed: None,
            amplitude: 0.0,
            modes: default_modes(),
            seed: 0,
            pe: default_pe(),
            re_tau: default_re_tau(),
            path: None,
        }
    }

    pub fn parabolic(centerline: f64) -> Self {
        Self {
            kind: ProviderKind::ParabolicChannel,
            ..Self::uniform(centerline)
        }
    }

    pub fn frozen_fourier(centerline: f64, amplitude: f64, modes: usize, seed: u64) -> Self {
        Self {
            kind: ProviderKind::FrozenFourier,
            amplitude,
            modes,
            seed,
            ..Self::uniform(centerline)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pe > 0.0 && self.pe.is_finite()) {
            return Err(Error::Config(format!(
                "Pe must be positive, got {}",
                self.pe
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !self.centerline_speed.is_finite() {
            return Err(Error::Config("centerline speed must be finite".into()));
        }
        if self.kind == ProviderKind::StoredSeries && self.path.is_none() {
            return Err(Error::Config("stored-series provider needs a path".into()));
        }
        Ok(())
    }

    pub fn diffusivity(&self) -> f64 {
        1.0 / self.pe
    }
}

/// Velocity snapshots at `t_k = k * dt`, each stored component-major
/// (all nodes of axis 0, then axis 1, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct VelocitySeries {
    grid: Arc<Grid>,
    dt: f64,
    snapshots: Vec<Vec<f64>>,
}

impl VelocitySeries {
    pub fn new(grid: Arc<Grid>, dt: f64, snapshots: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "snapshot spacing must be positive, got {dt}"
            )));
        }
        if snapshots.is_empty() {
            return Err(Error::Shape("velocity series has no snapshots".into()));
        }
        let want = grid.ndim() * grid.len();
        for (k, s) in snapshots.iter().enumerate() {
            if s.len() != want {
                return Err(Error::Shape(format!(
                    "snapshot {k} has {} values, expected {want}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Instability(format!("snapshot {k} is not finite")));
            }
        }
        Ok(Self {
            grid,
            dt,
            snapshots,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn last_time(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn snapshot(&self, k: usize) -> &[f64] {
        &self.snapshots[k]
    }

    pub fn snapshots_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.snapshots
    }

    /// One component of snapshot `k`.
    pub fn component(&self, k: usize, axis: usize) -> &[f64] {
        let n = self.grid.len();
        &self.snapshots[k][axis * n..(axis + 1) * n]
    }

    /// Velocity at time `t`, linear between snapshots. Borrowed without
    /// copying when `t` falls on a snapshot.
    pub fn at_time(&self, t: f64) -> Result<Cow<'_, [f64]>> {
        let last = self.last_time();
        let s = t / self.dt;
        let tol = 1e-9;
        if t < -tol * self.dt || s > (self.len() - 1) as f64 + tol {
            return Err(Error::Coverage { time: t, last });
        }
        let k = s.round();
        if (s - k).abs() < tol {
            return Ok(Cow::Borrowed(&self.snapshots[k as usize]));
        }
        let k0 = s.floor() as usize;
        let f = s - k0 as f64;
        let a = &self.snapshots[k0];
        let b = &self.snapshots[k0 + 1];
        Ok(Cow::Owned(
            a.iter()
                .zip(b)
                .map(|(x, y)| (1.0 - f) * x + f * y)
                .collect(),
        ))
    }

    /// Largest `|u_a|` per axis over all snapshots.
    pub fn max_speed(&self) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = vec![0.0f64; self.grid.ndim()];
        for s in &self.snapshots {
            for (a, m) in out.iter_mut().enumerate() {
                for v in &s[a * n..(a + 1) * n] {
                    *m = m.max(v.abs());
                }
            }
        }
        out
    }

    /// Advective Courant number `dt * sum_a max|u_a| / h_a`.
    pub fn courant(&self, dt: f64) -> f64 {
        self.max_speed()
            .iter()
            .zip(self.grid.spacing())
            .map(|(u, h)| dt * u / h)
            .sum()
    }

    /// Time-rms of the cross-stream velocity at the node nearest the channel
    /// centre of the sensing plane `x`.
    pub fn centerline_rms(&self, x: f64) -> Result<f64> {
        let g = &self.grid;
        if g.ndim() < 2 {
            return Ok(0.0);
        }
        let p = g.wrap_point(&{
            let mut p: Vec<f64> = (0..g.ndim())
                .map(|a| g.origin()[a] + 0.5 * g.extent()[a])
                .collect();
            p[0] = x;
            p
        })?;
        let idx: usize = (0..g.ndim())
            .map(|a| {
                let i = ((p[a] - g.origin()[a]) / g.spacing()[a]).round() as usize;
                i.min(g.dims()[a] - 1) * g.strides()[a]
            })
            .sum();
        let vals: Vec<f64> = (0..self.len()).map(|k| self.component(k, 1)[idx]).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
        Ok(var.sqrt())
    }
}

/// Discrete divergence `sum_a D_a u_a` of one snapshot, with the same
/// difference operators the transport kernel uses.
pub fn divergence(grid: &Grid, snapshot: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut div = vec![0.0; n];
    for a in 0..grid.ndim() {
        let d = central_derivative(grid, &snapshot[a * n..(a + 1) * n], a);
        for (o, v) in div.iter_mut().zip(d) {
            *o += v;
        }
    }
    div
}

/// Largest discrete divergence magnitude over all nodes and snapshots.
pub fn check_divergence(series: &VelocitySeries) -> f64 {
    (0..series.len())
        .map(|k| {
            divergence(series.grid(), series.snapshot(k))
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridConfig;
    use crate::time::TimeAxis;

    fn channel() -> Arc<Grid> {
        Arc::new(Grid::new(&GridConfig::channel_2d(32, 17, 6.0, 0.0, 0.0)).unwrap())
    }

    #[test]
    fn corrupted_snapshot_has_unit_divergence() {
        let g = channel();
        let ax = TimeAxis::from_steps(0.1, 2);
        let mut s = synthesize_velocity(&VelocityProviderSpec::uniform(18.0), &g, &ax).unwrap();
        assert_eq!(check_divergence(&s), 0.0);
        // Periodic wrap breaks u_x += x at the seam, so use a wall-bounded axis.
        let n = g.len();
        let snap = &mut s.snapshots_mut()[1];
        for idx in 0..n {
            let y = g.node_point(idx)[1];
            snap[n + idx] += y;
        }
        assert!((check_divergence(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_between_snapshots() {
        let g = channel();
        let n = g.len();
        let s = VelocitySeries::new(
            Arc::clone(&g),
            0.5,
            vec![vec![0.0; 2 * n], vec![2.0; 2 * n]],
        )
        .unwrap();
        assert_eq!(s.at_time(0.25).unwrap()[3], 1.0);
        assert!(matches!(s.at_time(0.5), Ok(Cow::Borrowed(_))));
        assert!(matches!(s.at_time(0.75), Err(Error::Coverage { .. })));
    }
}
