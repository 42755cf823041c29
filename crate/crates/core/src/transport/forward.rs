use std::sync::Arc;

use super::problem::{forward_step, Shape, TransportProblem, Workspace};
use super::sensors::SensorSet;
use super::source::SourceSpec;
use crate::domain::{ScalarField, Stencil};
use crate::error::{Error, Result};

/// Mollified sensor signal `<delta(x - x_k(t)), c(., t)>` on every step.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSeries {
    pub sensor: usize,
    pub values: Vec<f64>,
}

pub struct ForwardOutput {
    pub measurements: Vec<MeasurementSeries>,
    /// Concentration at every step, when requested.
    pub history: Option<Vec<ScalarField>>,
}

/// March `c` from zero under the source `amp[n] * delta_s`, calling
/// `observe(n, c^n)` for `n = 0..=N`.
pub(crate) fn march_forward(
    p: &TransportProblem,
    source: &Stencil,
    amp: &[f64],
    mut observe: impl FnMut(usize, &[f64]) -> Result<()>,
) -> Result<()> {
    let time = p.time();
    if amp.len() != time.len() {
        return Err(Error::Shape(format!(
            "source intensity has {} samples, solver has {}",
            amp.len(),
            time.len()
        )));
    }
    let mut c = vec![0.0; p.grid().len()];
    let mut ws = Workspace::new(c.len());
    observe(0, &c)?;
    for n in 0..time.steps() {
        forward_step(
            p,
            n,
            &mut c,
            Some((Shape::Sparse(source), amp[n], amp[n + 1])),
            &mut ws,
        );
        p.check_finite(&c, n + 1)?;
        observe(n + 1, &c)?;
    }
    Ok(())
}

/// Measurements of every sensor for the given source.
pub fn solve_forward(
    problem: &TransportProblem,
    source: &SourceSpec,
    sensors: &SensorSet,
    keep_history: bool,
) -> Result<ForwardOutput> {
    let stencil = source.stencil(problem.grid())?;
    forward_with_stencil(problem, &stencil, &source.phi, sensors, keep_history)
}

pub(crate) fn forward_with_stencil(
    problem: &TransportProblem,
    stencil: &Stencil,
    phi: &[f64],
    sensors: &SensorSet,
    keep_history: bool,
) -> Result<ForwardOutput> {
    sensors.check_time(problem.time())?;
    let len = problem.time().len();
    let mut values = vec![vec![0.0; len]; sensors.len()];
    let mut history = keep_history.then(Vec::new);
    let grid = Arc::clone(problem.grid());
    march_forward(problem, stencil, phi, |n, c| {
        for (k, v) in values.iter_mut().enumerate() {
            v[n] = sensors.at(k, n).sample(c);
        }
        if let Some(h) = history.as_mut() {
            h.push(ScalarField::from_values(Arc::clone(&grid), c.to_vec())?);
        }
        Ok(())
    })?;
    Ok(ForwardOutput {
        measurements: values
            .into_iter()
            .enumerate()
            .map(|(sensor, values)| MeasurementSeries { sensor, values })
            .collect(),
        history,
    })
}
