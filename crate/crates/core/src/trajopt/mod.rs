//! Sensor trajectory optimization through the adjoint-of-adjoint field.

mod cost;
mod optimize;

pub use cost::{
    calibrate_alphas, cost_j1, cost_j2, j1_amplitude, j2_amplitude, motion_integral,
    trajectory_gradient, Alphas, J1Terms,
};
pub use optimize::{
    optimize_trajectory, CostKind, IterationRecord, OptStop, TrajOptConfig, TrajOptContext,
    TrajOptReport,
};
