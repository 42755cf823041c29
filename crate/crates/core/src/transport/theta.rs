use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::forward::march_forward;
use super::problem::TransportProblem;
use super::sensors::SensorSet;
use crate::domain::interp::sample_values;
use crate::domain::{central_derivative, ScalarField, Stencil};
use crate::error::{Error, Result};
use crate::trajectory::SensorTrajectory;

/// How the spatial gradient of theta is read at the sensor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientSampling {
    /// Derivative of the mollified sample with respect to the sensor
    /// position. This is the exact gradient of the discrete cost.
    #[default]
    Mollified,
    /// Central differences of theta, interpolated multilinearly.
    Interpolated,
}

/// Gradient of theta at the sensor, one trace per movable axis.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaGradientRecord {
    pub axes: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl ThetaGradientRecord {
    pub fn zeros(axes: Vec<usize>, len: usize) -> Self {
        let values = vec![vec![0.0; len]; axes.len()];
        Self { axes, values }
    }
}

pub struct ThetaOutput {
    pub gradient: ThetaGradientRecord,
    pub history: Option<Vec<ScalarField>>,
}

/// March theta forward in time from zero under the source `amp(t) delta_s`
/// and record its gradient along `trajectory`.
pub fn solve_theta(
    problem: &TransportProblem,
    source: &Stencil,
    amplitude: &[f64],
    trajectory: &SensorTrajectory,
    beta: f64,
    sampling: GradientSampling,
    keep_history: bool,
) -> Result<ThetaOutput> {
    let grid = Arc::clone(problem.grid());
    let axes: Vec<usize> = trajectory.movable_axes().collect();
    let len = problem.time().len();
    if trajectory.len() != len {
        return Err(Error::Shape(format!(
            "trajectory has {} samples, solver has {len}",
            trajectory.len()
        )));
    }
    let mut record = ThetaGradientRecord::zeros(axes.clone(), len);
    let mut history = keep_history.then(Vec::new);
    let stencils = match sampling {
        GradientSampling::Mollified => Some(SensorSet::new(
            &grid,
            std::slice::from_ref(trajectory),
            beta,
            &axes,
        )?),
        GradientSampling::Interpolated => {
            trajectory.check_inside(&grid)?;
            None
        }
    };
    march_forward(problem, source, amplitude, |n, theta| {
        match &stencils {
            Some(set) => {
                let st = set.at(0, n);
                for (k, v) in record.values.iter_mut().enumerate() {
                    v[n] = st.sample_gradient(k, theta);
                }
            }
            None => {
                for (k, &a) in axes.iter().enumerate() {
                    let d = central_derivative(&grid, theta, a);
                    record.values[k][n] = sample_values(&grid, &d, trajectory.point(n))?;
                }
            }
        }
        if let Some(h) = history.as_mut() {
            h.push(ScalarField::from_values(Arc::clone(&grid), theta.to_vec())?);
        }
        Ok(())
    })?;
    Ok(ThetaOutput {
        gradient: record,
        history,
    })
}
