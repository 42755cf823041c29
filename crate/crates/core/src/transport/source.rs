use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{Grid, MollifiedDelta, Stencil};
use crate::error::{Error, Result};
use crate::time::TimeAxis;

/// Localized source `phi(t) delta(x - center)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    pub center: Vec<f64>,
    pub beta: f64,
    /// Intensity on solver steps.
    pub phi: Vec<f64>,
}

impl SourceSpec {
    pub fn new(center: Vec<f64>, beta: f64, phi: Vec<f64>) -> Result<Self> {
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "source intensity is not finite at step {i}"
            )));
        }
        Ok(Self { center, beta, phi })
    }

    pub fn delta(&self, grid: &Grid) -> Result<MollifiedDelta> {
        MollifiedDelta::new(grid, &self.center, self.beta)
    }

    pub fn stencil(&self, grid: &Grid) -> Result<Stencil> {
        Ok(self.delta(grid)?.stencil(grid))
    }
}

/// Temporal intensity profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Intensity {
    /// `1/2 (1 + cos(2 pi f t + pi))`, smoothly cycling between 0 and 1.
    Pulse {
        frequency: f64,
    },
    Constant {
        value: f64,
    },
}

impl Intensity {
    pub fn sample(&self, time: &TimeAxis) -> Vec<f64> {
        match self {
            Intensity::Pulse { frequency } => pulse_trace(time, *frequency),
            Intensity::Constant { value } => vec![*value; time.len()],
        }
    }
}

/// `1/2 (1 + cos(2 pi f t + pi))` on every solver step.
pub fn pulse_trace(time: &TimeAxis, frequency: f64) -> Vec<f64> {
    time.times()
        .iter()
        .map(|t| 0.5 * (1.0 + (2.0 * PI * frequency * t + PI).cos()))
        .collect()
}
