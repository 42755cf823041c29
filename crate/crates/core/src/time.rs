//! Uniform solver time axis and the trapezoidal quadrature shared by every
//! time integral in the crate.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeAxis {
    steps: usize,
    dt: f64,
}

impl TimeAxis {
    /// Axis over `[0, horizon]` with step `dt`; `horizon / dt` must be integral.
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0 && dt > 0.0 && horizon.is_finite() && dt.is_finite()) {
            return Err(Error::Config(format!(
                "horizon and dt must be positive, got T = {horizon}, dt = {dt}"
            )));
        }
        let steps = (horizon / dt).round() as usize;
        if steps == 0 || (steps as f64 * dt - horizon).abs() > 1e-9 * horizon {
            return Err(Error::Config(format!(
                "T / dt must be integral, got T = {horizon}, dt = {dt}"
            )));
        }
        Ok(Self::from_steps(horizon, steps))
    }

    pub fn from_steps(horizon: f64, steps: usize) -> Self {
        assert!(steps > 0, "time axis needs at least one step");
        Self {
            steps,
            dt: horizon / steps as f64,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of samples, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.time(n)).collect()
    }

    /// Trapezoidal weights: `dt/2` at both ends, `dt` inside.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.dt; self.len()];
        w[0] *= 0.5;
        w[self.steps] *= 0.5;
        w
    }

    pub fn weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.steps {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    /// Trapezoidal integral of a trace sampled on this axis.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values
            .iter()
            .enumerate()
            .map(|(n, v)| self.weight(n) * v)
            .sum()
    }

    /// `(1/T) * integral`.
    pub fn mean(&self, values: &[f64]) -> f64 {
        // Constant traces return their value exactly, so deviations vanish.
        if let Some(&v0) = values.first() {
            if values.iter().all(|&v| v == v0) {
                return v0;
            }
        }
        self.integrate(values) / self.horizon()
    }

    /// `sqrt((1/T) * integral (v - mean)^2)`.
    pub fn rms(&self, values: &[f64]) -> f64 {
        let m = self.mean(values);
        let dev: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
        self.mean(&dev).sqrt()
    }

    /// Integral over `[0, t_n]` for the first `n + 1` samples.
    pub fn integrate_prefix(&self, values: &[f64], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let inner: f64 = values[1..n].iter().sum();
        self.dt * (0.5 * values[0] + inner + 0.5 * values[n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_integral_horizon_rejected() {
        assert!(TimeAxis::new(3.0, 0.007).is_err());
        assert_eq!(TimeAxis::new(3.0, 0.01).unwrap().steps(), 300);
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let ax = TimeAxis::new(3.0, 0.1).unwrap();
        let v: Vec<f64> = ax.times().iter().map(|t| 2.0 * t + 1.0).collect();
        assert!((ax.integrate(&v) - 12.0).abs() < 1e-12);
        assert!((ax.mean(&v) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rms_of_sine() {
        let ax = TimeAxis::from_steps(3.0, 600);
        let v: Vec<f64> = ax
            .times()
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * t / 3.0).sin())
            .collect();
        assert!((ax.rms(&v) - 0.5f64.sqrt()).abs() < 1e-10);
    }
}
