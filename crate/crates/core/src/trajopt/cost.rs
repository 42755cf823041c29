use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::trajectory::SensorTrajectory;
use crate::transport::{AdjointRecord, ThetaGradientRecord};

/// Weights of the three sensitivity-shaping terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphas {
    /// Reward for large mean sensitivity.
    pub alpha1: f64,
    /// Penalty on sensitivity fluctuations.
    pub alpha2: f64,
    /// Penalty on sensor speed.
    pub alpha3: f64,
}

impl Alphas {
    pub const MEAN_ONLY: Alphas = Alphas {
        alpha1: 1.0,
        alpha2: 0.0,
        alpha3: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct J1Terms {
    pub total: f64,
    /// `-alpha1 * integral c* dt`
    pub term1: f64,
    /// `alpha2 * integral (c* - mean)^2 dt`
    pub term2: f64,
    /// `alpha3 * integral |u_m|^2 dt`
    pub term3: f64,
}

/// `integral (c* - mean)^2 dt`.
fn fluctuation_integral(record: &AdjointRecord) -> f64 {
    let m = record.mean();
    let sq: Vec<f64> = record.trace().iter().map(|c| (c - m) * (c - m)).collect();
    record.time().integrate(&sq)
}

/// Kinetic integral `sum_n |x_{n+1} - x_n|^2 / dt` over the movable axes:
/// `integral |u_m|^2 dt` with the velocity held constant on each interval.
pub fn motion_integral(traj: &SensorTrajectory) -> f64 {
    let dt = traj.time().dt();
    let mut s = 0.0;
    for a in traj.movable_axes() {
        let x = traj.axis_trace(a);
        for w in x.windows(2) {
            s += (w[1] - w[0]) * (w[1] - w[0]);
        }
    }
    s / dt
}

pub fn cost_j1(record: &AdjointRecord, traj: &SensorTrajectory, alphas: &Alphas) -> J1Terms {
    let term1 = -alphas.alpha1 * record.time().integrate(record.trace());
    let term2 = alphas.alpha2 * fluctuation_integral(record);
    let term3 = if alphas.alpha3 == 0.0 {
        0.0
    } else {
        alphas.alpha3 * motion_integral(traj)
    };
    J1Terms {
        total: term1 + term2 + term3,
        term1,
        term2,
        term3,
    }
}

/// Weights from target ratios of the second and third term to the first,
/// measured on the mean-only (Case A) run. An infinite `r21` selects the
/// pure fluctuation mode `alpha1 = 0, alpha2 = 1`.
pub fn calibrate_alphas(
    r21: f64,
    r31: f64,
    case_a: &AdjointRecord,
    case_a_traj: &SensorTrajectory,
) -> Result<Alphas> {
    if r21.is_nan() || r21 < 0.0 || r31.is_nan() || r31 < 0.0 || r31.is_infinite() {
        return Err(Error::Config(format!(
            "ratios must be >= 0 (r21 may be inf), got r21 = {r21}, r31 = {r31}"
        )));
    }
    let first = case_a.time().integrate(case_a.trace());
    let second = fluctuation_integral(case_a);
    let third = motion_integral(case_a_traj);
    if !(first > 0.0) {
        return Err(Error::DegenerateSensitivity(format!(
            "Case A sensitivity integral is {first}"
        )));
    }
    let (alpha1, alpha2) = if r21.is_infinite() {
        (0.0, 1.0)
    } else if r21 == 0.0 {
        (1.0, 0.0)
    } else if second > 0.0 {
        (1.0, r21 * first / second)
    } else {
        return Err(Error::DegenerateSensitivity(
            "Case A sensitivity has no fluctuations".into(),
        ));
    };
    let alpha3 = if r31 == 0.0 {
        0.0
    } else if third > 0.0 {
        r31 * first / third
    } else {
        return Err(Error::DegenerateSensitivity(
            "Case A trajectory does not move".into(),
        ));
    };
    Ok(Alphas {
        alpha1,
        alpha2,
        alpha3,
    })
}

/// Adjoint ratio as a cost; identical to [`metrics::epsilon`].
pub fn cost_j2(record: &AdjointRecord) -> Result<f64> {
    metrics::epsilon(record)
}

/// Source amplitude of the theta equation for the weighted cost:
/// `alpha1 - 2 alpha2 (c* - mean)`.
pub fn j1_amplitude(record: &AdjointRecord, alphas: &Alphas) -> Vec<f64> {
    let m = record.mean();
    record
        .trace()
        .iter()
        .map(|c| alphas.alpha1 - 2.0 * alphas.alpha2 * (c - m))
        .collect()
}

/// Source amplitude of the theta equation for the adjoint ratio, from the
/// quotient rule: `(1/T) (rms / mean^2 - (c* - mean) / (mean rms))`.
pub fn j2_amplitude(record: &AdjointRecord) -> Result<Vec<f64>> {
    let m = record.mean();
    let r = record.rms();
    if !(m > 0.0) {
        return Err(Error::DegenerateSensitivity(format!(
            "sensitivity mean is {m}; the sensor never sees the source"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::DegenerateSensitivity(
            "sensitivity has no fluctuations".into(),
        ));
    }
    let t = record.time().horizon();
    Ok(record
        .trace()
        .iter()
        .map(|c| (r / (m * m) - (c - m) / (m * r)) / t)
        .collect())
}

/// Per-step update direction `grad theta (x_m) + 2 alpha3 d2x_m/dt2` for each
/// movable axis. Moving the sensor along it lowers the cost.
pub fn trajectory_gradient(
    theta_grad: &ThetaGradientRecord,
    traj: &SensorTrajectory,
    alpha3: f64,
) -> Vec<Vec<f64>> {
    theta_grad
        .axes
        .iter()
        .zip(&theta_grad.values)
        .map(|(&a, g)| {
            if alpha3 == 0.0 {
                return g.clone();
            }
            let acc = traj.acceleration(a);
            g.iter()
                .zip(&acc)
                .map(|(gv, av)| gv + 2.0 * alpha3 * av)
                .collect()
        })
        .collect()
}
