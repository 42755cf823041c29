use std::sync::Arc;

use adjoint_sensing::domain::{Grid, GridConfig, MollifiedDelta, Stencil};
use adjoint_sensing::estimation::{estimate_phi, EstimationConfig, StepRule, StopReason};
use adjoint_sensing::time::TimeAxis;
use adjoint_sensing::trajectory::SensorTrajectory;
use adjoint_sensing::transport::{
    solve_forward, MeasurementSeries, SensorSet, SourceSpec, TransportProblem,
};
use adjoint_sensing::velocity::{synthesize_velocity, VelocityProviderSpec};
use proptest::prelude::*;

struct Setup {
    problem: TransportProblem,
    stencil: Stencil,
    sensors: SensorSet,
    beta: f64,
}

fn setup() -> Setup {
    let grid = Arc::new(Grid::new(&GridConfig::channel_2d(32, 12, 4.0, 0.0, 0.35)).unwrap());
    let time = TimeAxis::from_steps(0.8, 80);
    let spec = VelocityProviderSpec::frozen_fourier(3.0, 0.5, 6, 9);
    let vel = Arc::new(synthesize_velocity(&spec, &grid, &time).unwrap());
    let problem = TransportProblem::new(vel, 60.0, time).unwrap();
    let beta = MollifiedDelta::default_beta(&grid);
    let stencil = SourceSpec::new(vec![0.8, 0.0], beta, vec![0.0; time.len()])
        .unwrap()
        .stencil(&grid)
        .unwrap();
    let sensors = SensorSet::new(
        &grid,
        &[SensorTrajectory::stationary(time, vec![1.7, 0.0])],
        beta,
        &[],
    )
    .unwrap();
    Setup {
        problem,
        stencil,
        sensors,
        beta,
    }
}

fn observe(s: &Setup, phi: Vec<f64>) -> Vec<MeasurementSeries> {
    let src = SourceSpec::new(vec![0.8, 0.0], s.beta, phi).unwrap();
    solve_forward(&s.problem, &src, &s.sensors, false)
        .unwrap()
        .measurements
}

fn config(iterations: usize, step_rule: StepRule) -> EstimationConfig {
    EstimationConfig {
        max_iterations: iterations,
        step_rule,
        ..EstimationConfig::default()
    }
}

#[test]
fn silent_sensor_gives_zero_estimate() {
    let s = setup();
    let n = s.problem.time().len();
    let observed = observe(&s, vec![0.0; n]);
    let r = estimate_phi(
        &s.problem,
        &s.stencil,
        &s.sensors,
        &observed,
        &config(10, StepRule::ExactLineSearch),
    )
    .unwrap();
    assert_eq!(r.stop, StopReason::ZeroCost);
    assert!(r.phi.iter().all(|&v| v == 0.0));
    assert_eq!(r.iterations(), 0);
}

#[test]
fn fixed_steps_descend_or_are_rejected() {
    let s = setup();
    let time = *s.problem.time();
    let truth: Vec<f64> = time
        .times()
        .iter()
        .map(|t| (5.0 * t).sin().powi(2))
        .collect();
    let observed = observe(&s, truth);
    let exact = estimate_phi(
        &s.problem,
        &s.stencil,
        &s.sensors,
        &observed,
        &config(1, StepRule::ExactLineSearch),
    )
    .unwrap();
    let alpha = exact.alphas[0];
    let small = estimate_phi(
        &s.problem,
        &s.stencil,
        &s.sensors,
        &observed,
        &config(5, StepRule::Fixed { alpha: 0.5 * alpha }),
    )
    .unwrap();
    assert!(small.j_history.windows(2).all(|w| w[1] < w[0]));
    // Three times the optimal step overshoots a quadratic along the first direction.
    let big = estimate_phi(
        &s.problem,
        &s.stencil,
        &s.sensors,
        &observed,
        &config(5, StepRule::Fixed { alpha: 3.0 * alpha }),
    )
    .unwrap();
    assert_eq!(big.stop, StopReason::Rejected);
    assert!(big.phi.iter().all(|&v| v == 0.0));
}

#[test]
fn recovers_smooth_intensity() {
    let s = setup();
    let time = *s.problem.time();
    let truth: Vec<f64> = time
        .times()
        .iter()
        .map(|t| (3.0 * t).sin().powi(2))
        .collect();
    let observed = observe(&s, truth.clone());
    let r = estimate_phi(
        &s.problem,
        &s.stencil,
        &s.sensors,
        &observed,
        &config(100, StepRule::ExactLineSearch),
    )
    .unwrap();
    assert!(r.j_history.last().unwrap() < &(1e-4 * r.j_history[0]));
    // Releases from the first half reach the sensor well before the end.
    let half = time.len() / 2;
    let window = TimeAxis::from_steps(time.time(half), half);
    let psi = adjoint_sensing::metrics::psi_phi(&window, &truth[..=half], &r.phi[..=half]).unwrap();
    assert!(psi > 0.95, "psi = {psi}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn exact_line_search_never_increases_cost(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let s = setup();
        let time = *s.problem.time();
        let truth: Vec<f64> = time
            .times()
            .iter()
            .map(|t| coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * 4.0 * t).sin()).sum())
            .collect();
        let observed = observe(&s, truth);
        let r = estimate_phi(&s.problem, &s.stencil, &s.sensors, &observed, &config(15, StepRule::ExactLineSearch)).unwrap();
        prop_assert!(r.j_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn estimate_scales_with_the_observations(scale in 0.1f64..10.0) {
        let s = setup();
        let time = *s.problem.time();
        let truth: Vec<f64> = time.times().iter().map(|t| (6.0 * t).cos()).collect();
        let observed = observe(&s, truth);
        let scaled: Vec<MeasurementSeries> = observed
            .iter()
            .map(|m| MeasurementSeries { sensor: m.sensor, values: m.values.iter().map(|v| scale * v).collect() })
            .collect();
        let cfg = config(8, StepRule::ExactLineSearch);
        let a = estimate_phi(&s.problem, &s.stencil, &s.sensors, &observed, &cfg).unwrap();
        let b = estimate_phi(&s.problem, &s.stencil, &s.sensors, &scaled, &cfg).unwrap();
        let peak = a.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.phi.iter().zip(&b.phi) {
            prop_assert!((scale * x - y).abs() < 1e-9 * scale * peak);
        }
    }
}
