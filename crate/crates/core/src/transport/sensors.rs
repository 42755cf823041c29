use crate::domain::{Grid, MollifiedDelta, Stencil};
use crate::error::{Error, Result};
use crate::time::TimeAxis;
use crate::trajectory::SensorTrajectory;

enum Stencils {
    Fixed(Stencil),
    Moving(Vec<Stencil>),
}

/// Mollified sampling stencils for every sensor at every solver step.
pub struct SensorSet {
    sensors: Vec<Stencils>,
    steps: usize,
}

impl SensorSet {
    /// Stencils for `trajectories`, optionally carrying derivatives with
    /// respect to the sensor position along `grad_axes`.
    pub fn new(
        grid: &Grid,
        trajectories: &[SensorTrajectory],
        beta: f64,
        grad_axes: &[usize],
    ) -> Result<Self> {
        let steps = trajectories.first().map_or(0, |t| t.len());
        let mut sensors = Vec::with_capacity(trajectories.len());
        for (k, tr) in trajectories.iter().enumerate() {
            if tr.len() != steps {
                return Err(Error::Shape(format!(
                    "sensor {k} has {} samples, sensor 0 has {steps}",
                    tr.len()
                )));
            }
            let build = |n: usize| -> Result<Stencil> {
                let d = MollifiedDelta::new(grid, tr.point(n), beta).map_err(|e| match e {
                    Error::Placement(m) => Error::Placement(format!(
                        "sensor {k} leaves the domain at t = {}: {m}",
                        tr.time().time(n)
                    )),
                    other => other,
                })?;
                Ok(d.stencil_with_gradient(grid, grad_axes))
            };
            let fixed = tr.points().iter().all(|p| p == tr.point(0));
            sensors.push(if fixed {
                Stencils::Fixed(build(0)?)
            } else {
                Stencils::Moving((0..steps).map(build).collect::<Result<_>>()?)
            });
        }
        Ok(Self { sensors, steps })
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn check_time(&self, time: &TimeAxis) -> Result<()> {
        if !self.sensors.is_empty() && self.steps != time.len() {
            return Err(Error::Shape(format!(
                "sensor sampling has {} steps, solver has {}",
                self.steps,
                time.len()
            )));
        }
        Ok(())
    }

    /// Stencil of sensor `k` at step `n`.
    pub fn at(&self, k: usize, n: usize) -> &Stencil {
        match &self.sensors[k] {
            Stencils::Fixed(s) => s,
            Stencils::Moving(v) => &v[n],
        }
    }
}
