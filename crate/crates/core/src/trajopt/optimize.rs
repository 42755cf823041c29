use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use super::cost::{
    cost_j1, cost_j2, j1_amplitude, j2_amplitude, trajectory_gradient, Alphas, J1Terms,
};
use crate::domain::{Grid, Stencil};
use crate::error::{Error, Result};
use crate::metrics;
use crate::trajectory::{clamp_to_walls, InitialTrajectory, SensorTrajectory};
use crate::transport::{
    solve_adjoint, solve_theta, unit_weights, AdjointRecord, GradientSampling, SensorSet,
    TransportProblem,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    #[serde(alias = "j1")]
    J1,
    #[serde(alias = "j2")]
    J2,
}

fn default_step_scale() -> f64 {
    0.05
}

fn default_convergence_ratio() -> f64 {
    0.01
}

fn default_max_iterations() -> usize {
    60
}

fn default_halving_after() -> usize {
    2
}

fn default_initial() -> InitialTrajectory {
    InitialTrajectory::Circular {
        radius: 0.2,
        revolutions: 1.0,
    }
}

fn default_alphas() -> Alphas {
    Alphas::MEAN_ONLY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajOptConfig {
    pub cost: CostKind,
    /// Term weights for `J1`. Ignored by `J2`.
    #[serde(default = "default_alphas")]
    pub alphas: Alphas,
    /// Largest per-step displacement of every update.
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
    /// Stop once `|dJ_n / dJ_1|` falls below this.
    #[serde(default = "default_convergence_ratio")]
    pub convergence_ratio: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_initial")]
    pub initial: InitialTrajectory,
    /// Minimum distance from walls; two Gaussian standard deviations of the
    /// sensor mollifier when omitted.
    #[serde(default)]
    pub wall_margin: Option<f64>,
    #[serde(default)]
    pub gradient_sampling: GradientSampling,
    /// Cost increases, counted since the last halving, that halve the step.
    #[serde(default = "default_halving_after")]
    pub halving_after: usize,
}

impl TrajOptConfig {
    pub fn new(cost: CostKind, alphas: Alphas, initial: InitialTrajectory) -> Self {
        Self {
            cost,
            alphas,
            step_scale: default_step_scale(),
            convergence_ratio: default_convergence_ratio(),
            max_iterations: default_max_iterations(),
            initial,
            wall_margin: None,
            gradient_sampling: GradientSampling::default(),
            halving_after: default_halving_after(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.alphas.validate()?;
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::Config(format!(
                "step scale must be positive, got {}",
                self.step_scale
            )));
        }
        if !(self.convergence_ratio > 0.0) {
            return Err(Error::Config("convergence ratio must be positive".into()));
        }
        if self.halving_after == 0 {
            return Err(Error::Config("halving_after must be at least 1".into()));
        }
        Ok(())
    }
}

/// Source and sensor settings shared by every solve of one optimization.
pub struct TrajOptContext<'a> {
    pub problem: &'a TransportProblem,
    pub source: &'a Stencil,
    /// Sensor mollifier sharpness.
    pub beta: f64,
}

impl TrajOptContext<'_> {
    fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    /// Pure-sensitivity adjoint record of a single sensor on `traj`.
    pub fn sensitivity(&self, traj: &SensorTrajectory) -> Result<AdjointRecord> {
        let sensors = SensorSet::new(self.grid(), std::slice::from_ref(traj), self.beta, &[])?;
        let w = unit_weights(1, self.problem.time());
        Ok(solve_adjoint(self.problem, self.source, &w, &sensors, false)?.record)
    }

    /// Cost of `traj` given its record.
    pub fn cost(
        &self,
        cfg: &TrajOptConfig,
        record: &AdjointRecord,
        traj: &SensorTrajectory,
    ) -> Result<(f64, Option<J1Terms>)> {
        match cfg.cost {
            CostKind::J1 => {
                let t = cost_j1(record, traj, &cfg.alphas);
                Ok((t.total, Some(t)))
            }
            CostKind::J2 => Ok((cost_j2(record)?, None)),
        }
    }

    /// Update direction at `traj`, one trace per movable axis.
    pub fn direction(
        &self,
        cfg: &TrajOptConfig,
        record: &AdjointRecord,
        traj: &SensorTrajectory,
    ) -> Result<Vec<Vec<f64>>> {
        let (amp, alpha3) = match cfg.cost {
            CostKind::J1 => (j1_amplitude(record, &cfg.alphas), cfg.alphas.alpha3),
            CostKind::J2 => (j2_amplitude(record)?, 0.0),
        };
        let theta = solve_theta(
            self.problem,
            self.source,
            &amp,
            traj,
            self.beta,
            cfg.gradient_sampling,
            false,
        )?;
        Ok(trajectory_gradient(&theta.gradient, traj, alpha3))
    }

    /// Default wall clearance: two standard deviations of the mollifier.
    pub fn default_wall_margin(&self) -> f64 {
        2.0 / (2.0 * self.beta).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub j: f64,
    pub terms: Option<J1Terms>,
    /// Adjoint ratio, NaN when the mean sensitivity is not positive.
    pub epsilon: f64,
    /// `(J_n - J_{n-1}) / (J_1 - J_0)`; undefined at iteration 0.
    pub dj_ratio: Option<f64>,
    /// Largest per-step displacement of the update that produced this
    /// iterate.
    pub max_displacement: f64,
    pub step_scale: f64,
    /// Coordinates moved by the wall clamp.
    pub clamped: usize,
    pub fallback: bool,
    pub sensitivity_mean: f64,
    pub sensitivity_rms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptStop {
    Converged,
    ZeroDirection,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct TrajOptReport {
    pub iterations: Vec<IterationRecord>,
    pub trajectories: Vec<SensorTrajectory>,
    pub records: Vec<AdjointRecord>,
    /// Iterate with the lowest cost.
    pub best: usize,
    pub stop: OptStop,
}

impl TrajOptReport {
    pub fn best_trajectory(&self) -> &SensorTrajectory {
        &self.trajectories[self.best]
    }

    pub fn last_trajectory(&self) -> &SensorTrajectory {
        self.trajectories
            .last()
            .expect("report holds the initial trajectory")
    }

    pub fn best_record(&self) -> &AdjointRecord {
        &self.records[self.best]
    }

    pub fn initial_epsilon(&self) -> f64 {
        self.iterations[0].epsilon
    }

    pub fn best_epsilon(&self) -> f64 {
        self.iterations[self.best].epsilon
    }
}

fn epsilon_or_nan(record: &AdjointRecord) -> f64 {
    metrics::epsilon(record).unwrap_or(f64::NAN)
}

/// Descend the configured cost from `initial`, moving the sensor by at most
/// `step_scale` per step and iteration.
pub fn optimize_trajectory(
    ctx: &TrajOptContext<'_>,
    initial: &SensorTrajectory,
    cfg: &TrajOptConfig,
) -> Result<TrajOptReport> {
    cfg.validate()?;
    let grid = ctx.grid();
    let margin = cfg.wall_margin.unwrap_or_else(|| ctx.default_wall_margin());
    let mut traj = initial.clone();
    let clamped0 = clamp_to_walls(&mut traj, grid, margin);
    if clamped0 > 0 {
        warn!(
            "initial trajectory clamped at {clamped0} coordinates to keep {margin:.3} from walls"
        );
    }

    let mut record = ctx.sensitivity(&traj)?;
    let (mut j, terms) = ctx.cost(cfg, &record, &traj)?;
    let mut report = TrajOptReport {
        iterations: vec![IterationRecord {
            iteration: 0,
            j,
            terms,
            epsilon: epsilon_or_nan(&record),
            dj_ratio: None,
            max_displacement: 0.0,
            step_scale: cfg.step_scale,
            clamped: clamped0,
            fallback: false,
            sensitivity_mean: record.mean(),
            sensitivity_rms: record.rms(),
        }],
        trajectories: vec![traj.clone()],
        records: vec![record.clone()],
        best: 0,
        stop: OptStop::MaxIterations,
    };

    let mut step = cfg.step_scale;
    let mut fallback = false;
    let mut increases = 0;
    let mut dj0: Option<f64> = None;
    for it in 1..=cfg.max_iterations {
        let dir = ctx.direction(cfg, &record, &traj)?;
        let max_dir = dir.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_dir == 0.0 || !max_dir.is_finite() {
            info!("trajectory update direction vanished at iteration {it}");
            report.stop = OptStop::ZeroDirection;
            break;
        }
        let alpha = step / max_dir;
        let mut next = traj.clone();
        let axes: Vec<usize> = traj.movable_axes().collect();
        for (n, p) in next.points_mut().iter_mut().enumerate() {
            for (k, &a) in axes.iter().enumerate() {
                p[a] += alpha * dir[k][n];
            }
        }
        let clamped = clamp_to_walls(&mut next, grid, margin);
        if clamped > 0 {
            warn!("iteration {it}: wall clamp moved {clamped} coordinates");
        }
        let disp = next.max_displacement(&traj);
        let next_record = ctx.sensitivity(&next)?;
        let (j_next, terms) = ctx.cost(cfg, &next_record, &next)?;
        let dj = j_next - j;
        let ratio = match dj0 {
            None => {
                dj0 = Some(dj);
                1.0
            }
            Some(d0) => dj / d0,
        };
        debug!("iteration {it}: J = {j_next:.6e}, dJ/dJ0 = {ratio:.4e}, step = {step:.4e}");

        if dj > 0.0 {
            increases += 1;
        }
        let used_step = step;
        let used_fallback = fallback;
        if increases >= cfg.halving_after {
            step *= 0.5;
            fallback = true;
            increases = 0;
            info!("iteration {it}: cost rose {} times since the last halving, step halved to {step:.4e}", cfg.halving_after);
        }

        traj = next;
        record = next_record;
        j = j_next;
        report.iterations.push(IterationRecord {
            iteration: it,
            j,
            terms,
            epsilon: epsilon_or_nan(&record),
            dj_ratio: Some(ratio),
            max_displacement: disp,
            step_scale: used_step,
            clamped,
            fallback: used_fallback,
            sensitivity_mean: record.mean(),
            sensitivity_rms: record.rms(),
        });
        report.trajectories.push(traj.clone());
        report.records.push(record.clone());
        if j < report.iterations[report.best].j {
            report.best = it;
        }
        if dj0 == Some(0.0) || (it >= 2 && ratio.abs() < cfg.convergence_ratio) {
            report.stop = OptStop::Converged;
            break;
        }
    }
    info!(
        "trajectory optimization stopped ({:?}) after {} iterations, best J = {:.6e} at iteration {}",
        report.stop,
        report.iterations.len() - 1,
        report.iterations[report.best].j,
        report.best
    );
    Ok(report)
}
