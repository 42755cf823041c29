use std::sync::Arc;

use log::{info, warn};

use super::config::{ScenarioConfig, SensorsSection};
use crate::domain::{make_grid, Grid, MollifiedDelta, Stencil, STREAMWISE};
use crate::error::{Error, Result, StageExt};
use crate::estimation::{estimate_phi, EstimationResult};
use crate::metrics;
use crate::time::TimeAxis;
use crate::trajectory::{make_initial_trajectory, SensorTrajectory};
use crate::trajopt::{
    calibrate_alphas, optimize_trajectory, Alphas, CostKind, TrajOptConfig, TrajOptContext,
    TrajOptReport,
};
use crate::transport::{
    solve_adjoint, solve_forward, unit_weights, AdjointRecord, Intensity, MeasurementSeries,
    SensorSet, SourceSpec, TransportProblem, MAX_DIFFUSION_NUMBER,
};
use crate::velocity::{synthesize_velocity, VelocitySeries};

/// Snapshots used to probe the velocity magnitude before choosing `dt`.
const PROBE_STEPS: usize = 32;

/// Fraction of the diffusion limit used when `dt` is chosen automatically.
const DIFFUSION_SAFETY: f64 = 0.8;

/// A scenario with its grid, velocity and truth source materialized.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: Arc<Grid>,
    pub problem: TransportProblem,
    /// Mollifier sharpness of the source and of every sensor.
    pub beta: f64,
    pub truth: SourceSpec,
    pub source: Stencil,
}

/// Step count for `horizon` keeping the Courant number near `target` and the
/// diffusion number below its limit.
pub fn auto_steps(velocity: &VelocitySeries, nu: f64, horizon: f64, target: f64) -> usize {
    let per_dt = velocity.courant(1.0);
    let advective = (horizon * per_dt / target).ceil();
    let inv_h2: f64 = velocity
        .grid()
        .spacing()
        .iter()
        .map(|h| 1.0 / (h * h))
        .sum();
    let diffusive = (horizon * nu * inv_h2 / (DIFFUSION_SAFETY * MAX_DIFFUSION_NUMBER)).ceil();
    (advective.max(diffusive) as usize).max(1)
}

impl Scenario {
    pub fn prepare(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = Arc::new(make_grid(&config.grid.grid_config()).stage("grid")?);
        let spec = config.velocity_spec();
        let horizon = config.scenario.horizon;
        let time = match config.scenario.dt {
            Some(dt) => TimeAxis::new(horizon, dt)?,
            None => {
                let probe_axis = TimeAxis::from_steps(horizon, PROBE_STEPS);
                let probe = synthesize_velocity(&spec, &grid, &probe_axis).stage("velocity")?;
                let steps = auto_steps(
                    &probe,
                    spec.diffusivity(),
                    horizon,
                    config.scenario.target_courant,
                );
                TimeAxis::from_steps(horizon, steps)
            }
        };
        let velocity = synthesize_velocity(&spec, &grid, &time).stage("velocity")?;
        let problem = TransportProblem::with_sponge_rate(
            Arc::new(velocity),
            spec.pe,
            time,
            config.scenario.sponge_rate,
        )
        .stage("transport")?;
        info!(
            "scenario `{}`: {} steps, dt = {:.3e}, Courant {:.3}, diffusion number {:.3}",
            config.scenario.name,
            time.steps(),
            time.dt(),
            problem.courant(),
            problem.diffusion_number()
        );
        let beta = config
            .source
            .beta
            .unwrap_or_else(|| MollifiedDelta::default_beta(&grid));
        let truth = SourceSpec::new(
            config.source.center.clone(),
            beta,
            config.source.intensity.sample(&time),
        )?;
        let source = truth.stencil(&grid).stage("source")?;
        Ok(Self {
            config,
            grid,
            problem,
            beta,
            truth,
            source,
        })
    }

    /// Swap the truth intensity, keeping flow and geometry.
    pub fn set_intensity(&mut self, intensity: Intensity) -> Result<()> {
        self.truth = SourceSpec::new(
            self.truth.center.clone(),
            self.beta,
            intensity.sample(self.time()),
        )?;
        self.config.source.intensity = intensity;
        Ok(())
    }

    pub fn time(&self) -> &TimeAxis {
        self.problem.time()
    }

    pub fn plane(&self) -> f64 {
        self.config.scenario.plane
    }

    /// Source-to-plane distance over the centreline speed.
    pub fn convection_time(&self) -> f64 {
        (self.plane() - self.config.source.center[STREAMWISE])
            / self.config.velocity.centerline_speed
    }

    /// Prefix of the horizon over which a release can reach the sensing
    /// plane before `T`; the full horizon when the window is disabled.
    pub fn scoring_axis(&self) -> TimeAxis {
        let time = *self.time();
        if !self.config.scenario.observable_window {
            return time;
        }
        let tc = self.convection_time();
        let steps = ((time.horizon() - tc) / time.dt()).floor();
        if steps < 2.0 {
            warn!("convection time {tc:.3} leaves no observable window; scoring the full horizon");
            return time;
        }
        let steps = steps as usize;
        TimeAxis::from_steps(steps as f64 * time.dt(), steps)
    }

    /// Sensor held at cross-stream coordinate `y` of the sensing plane.
    pub fn stationary(&self, y: f64) -> SensorTrajectory {
        SensorTrajectory::stationary(*self.time(), vec![self.plane(), y])
    }

    pub fn sensor_set(&self, trajs: &[SensorTrajectory]) -> Result<SensorSet> {
        SensorSet::new(&self.grid, trajs, self.beta, &[])
    }

    /// Twin-experiment measurements of the truth source.
    pub fn measure(&self, trajs: &[SensorTrajectory]) -> Result<Vec<MeasurementSeries>> {
        let sensors = self.sensor_set(trajs)?;
        Ok(solve_forward(&self.problem, &self.truth, &sensors, false)?.measurements)
    }

    /// Summed sensitivity of `trajs` at the source.
    pub fn sensitivity(&self, trajs: &[SensorTrajectory]) -> Result<AdjointRecord> {
        let sensors = self.sensor_set(trajs)?;
        let w = unit_weights(trajs.len(), self.time());
        Ok(solve_adjoint(&self.problem, &self.source, &w, &sensors, false)?.record)
    }

    /// Measure the truth with `trajs` and reconstruct it.
    pub fn estimate(&self, trajs: &[SensorTrajectory]) -> Result<Estimate> {
        let sensors = self.sensor_set(trajs).stage("sensors")?;
        let observed = solve_forward(&self.problem, &self.truth, &sensors, false)
            .stage("truth forward solve")?
            .measurements;
        let result = estimate_phi(
            &self.problem,
            &self.source,
            &sensors,
            &observed,
            &self.config.estimation,
        )
        .stage("estimation")?;
        let window = self.scoring_axis();
        let n = window.len();
        let truth = &self.truth.phi[..n];
        let est = &result.phi[..n];
        let psi_phi = metrics::psi_phi(&window, truth, est).stage("metrics")?;
        let l2_norm = metrics::l2_norm(&window, truth, est).stage("metrics")?;
        info!(
            "estimation: {} iterations ({:?}), psi = {psi_phi:.4}, l2 = {l2_norm:.4}",
            result.iterations(),
            result.stop
        );
        Ok(Estimate {
            phi_true: self.truth.phi.clone(),
            result,
            window,
            psi_phi,
            l2_norm,
        })
    }

    /// Cross-stream positions of an equispaced array spanning the region
    /// where the time-mean concentration of a unit steady release exceeds
    /// `threshold` of its peak.
    pub fn array_positions(&self, count: usize, threshold: f64) -> Result<Vec<f64>> {
        let wall = self
            .grid
            .wall_axis()
            .ok_or_else(|| Error::Config("sensor array needs a wall-bounded axis".into()))?;
        let margin = 2.0 / (2.0 * self.beta).sqrt();
        let lo = self.grid.origin()[wall] + margin;
        let hi = self.grid.origin()[wall] + self.grid.extent()[wall] - margin;
        let ys: Vec<f64> = self
            .grid
            .axis_coords(wall)
            .into_iter()
            .filter(|y| (lo..=hi).contains(y))
            .collect();
        let rake: Vec<SensorTrajectory> = ys.iter().map(|&y| self.stationary(y)).collect();
        let sensors = self.sensor_set(&rake)?;
        let time = *self.time();
        let steady = SourceSpec::new(self.truth.center.clone(), self.beta, vec![1.0; time.len()])?;
        let out = solve_forward(&self.problem, &steady, &sensors, false)?;
        // Average after the plume has had time to arrive.
        let start = ((self.convection_time() / time.dt()).ceil() as usize).min(time.steps() - 1);
        let means: Vec<f64> = out
            .measurements
            .iter()
            .map(|m| {
                let tail = &m.values[start..];
                tail.iter().sum::<f64>() / tail.len() as f64
            })
            .collect();
        let peak = means.iter().copied().fold(0.0f64, f64::max);
        if !(peak > 0.0) {
            return Err(Error::DegenerateSensitivity(
                "steady release never reaches the sensing plane".into(),
            ));
        }
        let inside: Vec<f64> = ys
            .iter()
            .zip(&means)
            .filter(|(_, m)| **m >= threshold * peak)
            .map(|(y, _)| *y)
            .collect();
        let (a, b) = (inside[0], inside[inside.len() - 1]);
        info!("array spans the mean plume on [{a:.3}, {b:.3}]");
        Ok(if count == 1 {
            vec![0.5 * (a + b)]
        } else {
            (0..count)
                .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
                .collect()
        })
    }

    /// Stationary sensors of the configured layout; `None` for a moving
    /// sensor.
    pub fn stationary_layout(&self) -> Result<Option<Vec<SensorTrajectory>>> {
        Ok(match &self.config.sensors {
            SensorsSection::Stationary { points } => {
                Some(points.iter().map(|p| self.stationary(p[0])).collect())
            }
            SensorsSection::Array { count, threshold } => Some(
                self.array_positions(*count, *threshold)
                    .stage("array calibration")?
                    .into_iter()
                    .map(|y| self.stationary(y))
                    .collect(),
            ),
            SensorsSection::Moving => None,
        })
    }

    pub fn context(&self) -> TrajOptContext<'_> {
        TrajOptContext {
            problem: &self.problem,
            source: &self.source,
            beta: self.beta,
        }
    }

    pub fn initial_trajectory(&self) -> Result<SensorTrajectory> {
        make_initial_trajectory(
            &self.config.initial_trajectory(),
            &self.grid,
            self.time(),
            self.plane(),
        )
    }

    pub fn trajopt_config(&self, cost: CostKind, alphas: Alphas) -> TrajOptConfig {
        let mut cfg = self.config.optimizer.descent.to_config(cost, alphas);
        cfg.initial = self.config.initial_trajectory();
        cfg
    }

    pub fn optimize(
        &self,
        initial: &SensorTrajectory,
        cfg: &TrajOptConfig,
    ) -> Result<TrajOptReport> {
        optimize_trajectory(&self.context(), initial, cfg).stage("trajectory optimization")
    }

    /// Optimize the configured cost. For `J1` with nonzero ratios and no
    /// explicit weights, a mean-only run calibrates the weights first.
    pub fn optimize_configured(&self, initial: &SensorTrajectory) -> Result<Optimization> {
        let o = &self.config.optimizer;
        let mut calibration = None;
        let alphas = match (o.cost, o.alphas) {
            (CostKind::J2, _) => Alphas::MEAN_ONLY,
            (CostKind::J1, Some(a)) => a,
            (CostKind::J1, None) if o.r21 == 0.0 && o.r31 == 0.0 => Alphas::MEAN_ONLY,
            (CostKind::J1, None) => {
                let a = self.optimize(
                    initial,
                    &self.trajopt_config(CostKind::J1, Alphas::MEAN_ONLY),
                )?;
                let alphas = calibrate_alphas(o.r21, o.r31, a.best_record(), a.best_trajectory())
                    .stage("alpha calibration")?;
                calibration = Some(a);
                alphas
            }
        };
        let report = self.optimize(initial, &self.trajopt_config(o.cost, alphas))?;
        Ok(Optimization {
            alphas,
            report,
            calibration,
        })
    }

    /// Run the configured experiment end to end.
    pub fn run(&self) -> Result<ExperimentOutcome> {
        let (sensors, optimization) = match self.stationary_layout()? {
            Some(s) => (s, None),
            None => {
                let init = self.initial_trajectory().stage("initial trajectory")?;
                let opt = self.optimize_configured(&init)?;
                (vec![opt.report.best_trajectory().clone()], Some(opt))
            }
        };
        let record = match &optimization {
            Some(o) => o.report.best_record().clone(),
            None => self.sensitivity(&sensors).stage("sensitivity")?,
        };
        let epsilon = metrics::epsilon(&record).unwrap_or_else(|e| {
            warn!("adjoint ratio undefined: {e}");
            f64::NAN
        });
        let estimate = self.estimate(&sensors)?;
        Ok(ExperimentOutcome {
            sensors,
            record,
            epsilon,
            estimate,
            optimization,
        })
    }
}

/// Reconstruction and its scores against the truth.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub phi_true: Vec<f64>,
    pub result: EstimationResult,
    /// Axis over which the scores are computed.
    pub window: TimeAxis,
    pub psi_phi: f64,
    pub l2_norm: f64,
}

#[derive(Clone, Debug)]
pub struct Optimization {
    pub alphas: Alphas,
    pub report: TrajOptReport,
    /// Mean-only run used to calibrate the weights.
    pub calibration: Option<TrajOptReport>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub sensors: Vec<SensorTrajectory>,
    /// Summed sensitivity of the sensors at the source.
    pub record: AdjointRecord,
    pub epsilon: f64,
    pub estimate: Estimate,
    pub optimization: Option<Optimization>,
}
