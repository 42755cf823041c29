use std::sync::Arc;

use super::problem::{reverse_step, TransportProblem, Workspace};
use super::sensors::SensorSet;
use crate::domain::{ScalarField, Stencil};
use crate::error::{Error, Result};
use crate::time::TimeAxis;

/// Fraction of the trace maximum that marks the arrival of sensitivity.
pub const ONSET_FRACTION: f64 = 0.01;

/// Adjoint concentration at the source location over the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointRecord {
    time: TimeAxis,
    trace: Vec<f64>,
    mean: f64,
    rms: f64,
    convection_delay: Option<f64>,
}

impl AdjointRecord {
    pub fn new(time: TimeAxis, trace: Vec<f64>) -> Result<Self> {
        if trace.len() != time.len() {
            return Err(Error::Shape(format!(
                "trace has {} samples, time axis has {}",
                trace.len(),
                time.len()
            )));
        }
        let mean = time.mean(&trace);
        let rms = time.rms(&trace);
        let convection_delay = onset_reverse_time(&time, &trace);
        Ok(Self {
            time,
            trace,
            mean,
            rms,
            convection_delay,
        })
    }

    pub fn time(&self) -> &TimeAxis {
        &self.time
    }

    /// `c*(x_s, t_n)` indexed by physical time.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn rms(&self) -> f64 {
        self.rms
    }

    /// Reverse time `T - t` at which the trace first exceeds 1% of its
    /// maximum, counting from the end of the horizon. `None` for a trace
    /// that never becomes positive.
    pub fn convection_delay(&self) -> Option<f64> {
        self.convection_delay
    }
}

fn onset_reverse_time(time: &TimeAxis, trace: &[f64]) -> Option<f64> {
    let max = trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return None;
    }
    let last = trace.iter().rposition(|&v| v > ONSET_FRACTION * max)?;
    Some(time.horizon() - time.time(last))
}

pub struct AdjointOutput {
    pub record: AdjointRecord,
    /// `c*` at every step, when requested.
    pub history: Option<Vec<ScalarField>>,
}

/// Unit forcing for every sensor at every step.
pub fn unit_weights(sensors: usize, time: &TimeAxis) -> Vec<Vec<f64>> {
    vec![vec![1.0; time.len()]; sensors]
}

/// Solve the transposed problem forced by `sum_k w_k(t) delta(x - x_k(t))`
/// and record `c*` at `source`.
///
/// The result satisfies, to round-off,
/// `sum_n tau_n <c*^n, q^n> = sum_n tau_n sum_k w_k^n M_k^n`
/// for any forward source `q` with measurements `M`, `tau` being the
/// trapezoidal time weights.
pub fn solve_adjoint(
    problem: &TransportProblem,
    source: &Stencil,
    weights: &[Vec<f64>],
    sensors: &SensorSet,
    keep_history: bool,
) -> Result<AdjointOutput> {
    let time = *problem.time();
    sensors.check_time(&time)?;
    if weights.len() != sensors.len() {
        return Err(Error::Shape(format!(
            "{} forcing traces for {} sensors",
            weights.len(),
            sensors.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| w.len() != time.len()) {
        return Err(Error::Shape(format!(
            "forcing trace has {} samples, solver has {}",
            w.len(),
            time.len()
        )));
    }
    let steps = time.steps();
    let len = problem.grid().len();
    let grid = Arc::clone(problem.grid());

    let inject = |n: usize, mu: &mut [f64]| {
        let tau = time.weight(n);
        for (k, w) in weights.iter().enumerate() {
            if w[n] != 0.0 {
                sensors.at(k, n).inject(tau * w[n], mu);
            }
        }
    };

    let mut mu = vec![0.0; len];
    inject(steps, &mut mu);
    let mut ws = Workspace::new(len);
    let mut trace = vec![0.0; time.len()];
    let mut fields: Option<Vec<Vec<f64>>> = keep_history.then(|| vec![Vec::new(); time.len()]);
    let mut prev_tilde = vec![0.0; len];

    for n in (0..steps).rev() {
        reverse_step(problem, n, &mut mu, &mut ws);
        problem.check_finite(&mu, n)?;
        // ws.k2 = S mu^{n+1}, ws.tmp = v~_n.
        let v = &ws.k2;
        if n + 1 == steps {
            trace[steps] = source.sample(v);
            if let Some(f) = fields.as_mut() {
                f[steps] = v.clone();
            }
        } else {
            trace[n + 1] = 0.5 * (source.sample(&prev_tilde) + source.sample(v));
            if let Some(f) = fields.as_mut() {
                f[n + 1] = prev_tilde
                    .iter()
                    .zip(v)
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
            }
        }
        prev_tilde.copy_from_slice(&ws.tmp);
        if n > 0 {
            inject(n, &mut mu);
        }
    }
    trace[0] = source.sample(&prev_tilde);
    if let Some(f) = fields.as_mut() {
        f[0] = prev_tilde;
    }

    let history = fields
        .map(|f| {
            f.into_iter()
                .map(|v| ScalarField::from_values(Arc::clone(&grid), v))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(AdjointOutput {
        record: AdjointRecord::new(time, trace)?,
        history,
    })
}
