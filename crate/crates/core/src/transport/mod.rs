//! Forward, adjoint and adjoint-of-adjoint transport sharing one kernel.

mod adjoint;
mod forward;
mod history;
mod operator;
mod problem;
mod sensors;
mod source;
mod theta;

pub use adjoint::{solve_adjoint, unit_weights, AdjointOutput, AdjointRecord, ONSET_FRACTION};
pub use forward::{solve_forward, ForwardOutput, MeasurementSeries};
pub use history::dump_history;
pub use operator::sponge_mask;
pub use problem::{
    step, Direction, TransportProblem, DEFAULT_SPONGE_RATE, MAX_COURANT, MAX_DIFFUSION_NUMBER,
};
pub use sensors::SensorSet;
pub use source::{pulse_trace, Intensity, SourceSpec};
pub use theta::{solve_theta, GradientSampling, ThetaGradientRecord, ThetaOutput};

pub(crate) use forward::forward_with_stencil;
