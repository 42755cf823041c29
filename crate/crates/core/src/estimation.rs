//! Source-intensity reconstruction by adjoint steepest descent.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::domain::Stencil;
use crate::error::{Error, Result};
use crate::time::TimeAxis;
use crate::transport::{
    forward_with_stencil, solve_adjoint, MeasurementSeries, SensorSet, TransportProblem,
};

pub use crate::transport::SourceSpec;

/// `integral 1/2 sum_k (predicted_k - observed_k)^2 dt`, trapezoidal.
pub fn cost_j(
    predicted: &[MeasurementSeries],
    observed: &[MeasurementSeries],
    time: &TimeAxis,
) -> Result<f64> {
    let r = residuals(predicted, observed, time)?;
    Ok(0.5 * tau_dot(&r, &r, time))
}

fn residuals(
    predicted: &[MeasurementSeries],
    observed: &[MeasurementSeries],
    time: &TimeAxis,
) -> Result<Vec<Vec<f64>>> {
    if predicted.len() != observed.len() {
        return Err(Error::Shape(format!(
            "{} predicted series against {} observed",
            predicted.len(),
            observed.len()
        )));
    }
    predicted
        .iter()
        .zip(observed)
        .map(|(p, o)| {
            if p.sensor != o.sensor || p.values.len() != time.len() || o.values.len() != time.len()
            {
                return Err(Error::Shape(format!(
                    "series for sensors {} / {} do not match the time axis",
                    p.sensor, o.sensor
                )));
            }
            Ok(p.values.iter().zip(&o.values).map(|(a, b)| a - b).collect())
        })
        .collect()
}

/// `sum_k integral a_k b_k dt`.
fn tau_dot(a: &[Vec<f64>], b: &[Vec<f64>], time: &TimeAxis) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let prod: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
            time.integrate(&prod)
        })
        .sum()
}

/// Exact minimizer of the quadratic cost along `-g`: with `r` the current
/// residuals and `s` the measurement response to `+g`,
/// `alpha = <r, s> / <s, s>` so the update `phi - alpha g` leaves residual
/// `r - alpha s`.
pub fn line_search_alpha(r: &[Vec<f64>], s: &[Vec<f64>], time: &TimeAxis) -> Result<f64> {
    let ss = tau_dot(s, s, time);
    if !(ss > 0.0) {
        return Err(Error::Stagnation(
            "search direction has no measurable response".into(),
        ));
    }
    Ok(tau_dot(r, s, time) / ss)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepRule {
    Fixed { alpha: f64 },
    ExactLineSearch,
}

fn default_max_iterations() -> usize {
    200
}

fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_step_rule")]
    pub step_rule: StepRule,
    /// Stop when the relative decrease `(J_n - J_{n+1}) / J_n` drops below this.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Starting intensity; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

fn default_step_rule() -> StepRule {
    StepRule::ExactLineSearch
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            max_iterations: default_max_iterations(),
            step_rule: default_step_rule(),
            tolerance: default_tolerance(),
            initial: None,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "estimation tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if let StepRule::Fixed { alpha } = self.step_rule {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::Config(format!(
                    "fixed step must be positive, got {alpha}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Cost is exactly zero.
    ZeroCost,
    Tolerance,
    MaxIterations,
    /// Gradient vanished or has no measurable response.
    Stagnation,
    /// A fixed step would have increased the cost.
    Rejected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub phi: Vec<f64>,
    /// Cost before each iteration and after the last accepted one.
    pub j_history: Vec<f64>,
    /// `sqrt(integral g^2 dt)` of each gradient.
    pub grad_norms: Vec<f64>,
    pub alphas: Vec<f64>,
    pub stop: StopReason,
}

impl EstimationResult {
    pub fn iterations(&self) -> usize {
        self.alphas.len()
    }
}

/// Reconstruct the intensity of a source with stencil `source` from
/// `observed` measurements.
///
/// Each iteration costs one adjoint solve (gradient `c*(x_s, t)` forced by
/// the residuals) and one forward solve (response to the gradient).
pub fn estimate_phi(
    problem: &TransportProblem,
    source: &Stencil,
    sensors: &SensorSet,
    observed: &[MeasurementSeries],
    config: &EstimationConfig,
) -> Result<EstimationResult> {
    config.validate()?;
    let time = *problem.time();
    let mut phi = match &config.initial {
        Some(p) if p.len() != time.len() => {
            return Err(Error::Shape(format!(
                "initial guess has {} samples, solver has {}",
                p.len(),
                time.len()
            )))
        }
        Some(p) => p.clone(),
        None => vec![0.0; time.len()],
    };
    let predicted = if phi.iter().all(|&v| v == 0.0) {
        observed
            .iter()
            .map(|o| MeasurementSeries {
                sensor: o.sensor,
                values: vec![0.0; time.len()],
            })
            .collect()
    } else {
        forward_with_stencil(problem, source, &phi, sensors, false)?.measurements
    };
    let mut r = residuals(&predicted, observed, &time)?;
    let mut j = 0.5 * tau_dot(&r, &r, &time);
    let mut out = EstimationResult {
        phi: Vec::new(),
        j_history: vec![j],
        grad_norms: Vec::new(),
        alphas: Vec::new(),
        stop: StopReason::MaxIterations,
    };

    for it in 0..config.max_iterations {
        if j == 0.0 {
            out.stop = StopReason::ZeroCost;
            break;
        }
        let adj = solve_adjoint(problem, source, &r, sensors, false)?;
        let g = adj.record.trace().to_vec();
        let gn = time
            .integrate(&g.iter().map(|v| v * v).collect::<Vec<_>>())
            .sqrt();
        if gn == 0.0 {
            out.stop = StopReason::Stagnation;
            break;
        }
        let s: Vec<Vec<f64>> = forward_with_stencil(problem, source, &g, sensors, false)?
            .measurements
            .into_iter()
            .map(|m| m.values)
            .collect();
        let alpha = match config.step_rule {
            StepRule::ExactLineSearch => match line_search_alpha(&r, &s, &time) {
                Ok(a) => a,
                Err(Error::Stagnation(_)) => {
                    out.stop = StopReason::Stagnation;
                    break;
                }
                Err(e) => return Err(e),
            },
            StepRule::Fixed { alpha } => alpha,
        };
        let r_new: Vec<Vec<f64>> = r
            .iter()
            .zip(&s)
            .map(|(rk, sk)| rk.iter().zip(sk).map(|(a, b)| a - alpha * b).collect())
            .collect();
        let j_new = 0.5 * tau_dot(&r_new, &r_new, &time);
        debug!("estimation iteration {it}: J = {j:.6e} -> {j_new:.6e}, alpha = {alpha:.4e}");
        if j_new > j {
            if config.step_rule == StepRule::ExactLineSearch && j_new > j * (1.0 + 1e-10) {
                return Err(Error::Consistency(format!(
                    "cost increased under exact line search at iteration {it}: {j} -> {j_new}"
                )));
            }
            out.stop = StopReason::Rejected;
            break;
        }
        for (p, gv) in phi.iter_mut().zip(&g) {
            *p -= alpha * gv;
        }
        r = r_new;
        let decrease = (j - j_new) / j;
        j = j_new;
        out.grad_norms.push(gn);
        out.alphas.push(alpha);
        out.j_history.push(j);
        if decrease < config.tolerance {
            out.stop = StopReason::Tolerance;
            break;
        }
    }
    out.phi = phi;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Vec<f64>, sensor: usize) -> MeasurementSeries {
        MeasurementSeries { sensor, values }
    }

    #[test]
    fn cost_closed_forms() {
        let ax = TimeAxis::from_steps(3.0, 30);
        let zero = vec![series(vec![0.0; 31], 0), series(vec![0.0; 31], 1)];
        let gaps = vec![series(vec![0.5; 31], 0), series(vec![2.0; 31], 1)];
        assert_eq!(cost_j(&zero, &zero, &ax).unwrap(), 0.0);
        let j = cost_j(&gaps, &zero, &ax).unwrap();
        assert!((j - 3.0 * (0.25 + 4.0) / 2.0).abs() < 1e-12);
        let one = cost_j(&gaps[..1], &zero[..1], &ax).unwrap();
        assert!((one - 3.0 * 0.25 / 2.0).abs() < 1e-12);
        assert!(matches!(
            cost_j(&gaps, &zero[..1], &ax),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn scalar_line_search() {
        let ax = TimeAxis::from_steps(1.0, 1);
        let a = line_search_alpha(&[vec![2.0, 2.0]], &[vec![1.0, 1.0]], &ax).unwrap();
        assert!((a - 2.0).abs() < 1e-15);
        assert!(matches!(
            line_search_alpha(&[vec![2.0, 2.0]], &[vec![0.0, 0.0]], &ax),
            Err(Error::Stagnation(_))
        ));
    }

    #[test]
    fn orthogonal_residual_leaves_cost_unchanged() {
        let ax = TimeAxis::from_steps(1.0, 2);
        let r = vec![vec![1.0, 0.0, -1.0]];
        let s = vec![vec![1.0, 1.0, 1.0]];
        let a = line_search_alpha(&r, &s, &ax).unwrap();
        let r2: Vec<Vec<f64>> = vec![r[0].iter().zip(&s[0]).map(|(x, y)| x - a * y).collect()];
        assert!((tau_dot(&r2, &r2, &ax) - tau_dot(&r, &r, &ax)).abs() < 1e-12);
    }

    #[test]
    fn line_search_beats_scanned_steps() {
        let ax = TimeAxis::from_steps(1.0, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..13).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let s: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..13).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let cost = |a: f64| {
            let d: Vec<Vec<f64>> = r
                .iter()
                .zip(&s)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - a * q).collect())
                .collect();
            tau_dot(&d, &d, &ax)
        };
        let best = line_search_alpha(&r, &s, &ax).unwrap();
        for k in 0..20 {
            let probe = -2.0 + 0.2 * k as f64;
            assert!(cost(best) <= cost(probe) + 1e-14);
        }
    }
}
