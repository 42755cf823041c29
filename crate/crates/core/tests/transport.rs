use std::sync::Arc;

use adjoint_sensing::domain::{Grid, GridConfig, MollifiedDelta};
use adjoint_sensing::time::TimeAxis;
use adjoint_sensing::trajectory::SensorTrajectory;
use adjoint_sensing::transport::{
    solve_adjoint, solve_forward, unit_weights, SensorSet, SourceSpec, TransportProblem,
};
use adjoint_sensing::velocity::{synthesize_velocity, VelocityProviderSpec};
use proptest::prelude::*;

const SPEED: f64 = 2.0;

struct Setup {
    grid: Arc<Grid>,
    problem: TransportProblem,
    beta: f64,
}

fn channel(spec: &VelocityProviderSpec, horizon: f64, steps: usize) -> Setup {
    channel_on(
        GridConfig::channel_2d(64, 16, 4.0, 0.0, 0.35),
        spec,
        100.0,
        horizon,
        steps,
    )
}

fn channel_on(
    cfg: GridConfig,
    spec: &VelocityProviderSpec,
    peclet: f64,
    horizon: f64,
    steps: usize,
) -> Setup {
    let grid = Arc::new(Grid::new(&cfg).unwrap());
    let time = TimeAxis::from_steps(horizon, steps);
    let vel = Arc::new(synthesize_velocity(spec, &grid, &time).unwrap());
    let problem = TransportProblem::new(vel, peclet, time).unwrap();
    let beta = MollifiedDelta::default_beta(&grid);
    Setup {
        grid,
        problem,
        beta,
    }
}

fn probe(s: &Setup, point: Vec<f64>) -> SensorSet {
    let time = *s.problem.time();
    SensorSet::new(
        &s.grid,
        &[SensorTrajectory::stationary(time, point)],
        s.beta,
        &[],
    )
    .unwrap()
}

#[test]
fn released_mass_follows_trapezoidal_integral() {
    let s = channel(&VelocityProviderSpec::uniform(SPEED), 0.3, 60);
    let time = *s.problem.time();
    let phi: Vec<f64> = time.times().iter().map(|t| 1.0 + (7.0 * t).sin()).collect();
    let src = SourceSpec::new(vec![1.5, 0.0], s.beta, phi.clone()).unwrap();
    let out = solve_forward(&s.problem, &src, &probe(&s, vec![2.5, 0.0]), true).unwrap();
    let history = out.history.unwrap();
    for n in (0..time.len()).step_by(10) {
        let released = time.integrate_prefix(&phi, n);
        let mass = history[n].integral();
        assert!(
            (mass - released).abs() < 1e-10 * released.abs().max(1e-3),
            "step {n}: {mass} vs {released}"
        );
    }
}

#[test]
fn puff_centroid_travels_with_the_flow() {
    let s = channel(&VelocityProviderSpec::uniform(SPEED), 0.6, 240);
    let time = *s.problem.time();
    let phi: Vec<f64> = (0..time.len())
        .map(|n| if n < 4 { 1.0 } else { 0.0 })
        .collect();
    let src = SourceSpec::new(vec![1.0, 0.0], s.beta, phi).unwrap();
    let out = solve_forward(&s.problem, &src, &probe(&s, vec![2.0, 0.0]), true).unwrap();
    let history = out.history.unwrap();
    let release_time = 1.5 * time.dt();
    for n in [60, 120, 240] {
        let field = &history[n];
        let weighted: f64 = field
            .values()
            .iter()
            .zip(s.grid.weights())
            .enumerate()
            .map(|(idx, (c, w))| c * w * s.grid.node_point(idx)[0])
            .sum();
        let centroid = weighted / field.integral();
        let expected = 1.0 + SPEED * (time.time(n) - release_time);
        assert!(
            (centroid - expected).abs() < 0.01,
            "t = {}: {centroid} vs {expected}",
            time.time(n)
        );
    }
}

#[test]
fn adjoint_onset_matches_convection_time() {
    let s = channel_on(
        GridConfig::channel_2d(128, 32, 8.0, 0.0, 0.35),
        &VelocityProviderSpec::uniform(SPEED),
        1000.0,
        3.0,
        400,
    );
    let time = *s.problem.time();
    let src = SourceSpec::new(vec![1.0, 0.0], s.beta, vec![0.0; time.len()]).unwrap();
    let sensors = probe(&s, vec![5.0, 0.0]);
    let record = solve_adjoint(
        &s.problem,
        &src.stencil(&s.grid).unwrap(),
        &unit_weights(1, &time),
        &sensors,
        false,
    )
    .unwrap()
    .record;
    let onset = record.convection_delay().unwrap();
    let expected = 4.0 / SPEED;
    assert!(
        (onset - expected).abs() / expected < 0.15,
        "{onset} vs {expected}"
    );
    // No sensitivity before the signal can arrive.
    let late = ((time.horizon() - 0.5 * expected) / time.dt()) as usize;
    assert!(record.trace()[late..].iter().all(|v| v.abs() < 1e-6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn measurements_are_linear_in_the_intensity(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        f1 in 0.5f64..6.0,
        f2 in 0.5f64..6.0,
    ) {
        let s = channel(&VelocityProviderSpec::frozen_fourier(2.0, 0.5, 6, 4), 0.4, 80);
        let time = *s.problem.time();
        let sensors = probe(&s, vec![1.6, 0.1]);
        let trace = |f: f64| -> Vec<f64> { time.times().iter().map(|t| (f * t).sin()).collect() };
        let measure = |phi: Vec<f64>| -> Vec<f64> {
            let src = SourceSpec::new(vec![1.0, 0.0], s.beta, phi).unwrap();
            solve_forward(&s.problem, &src, &sensors, false).unwrap().measurements[0].values.clone()
        };
        let p1 = trace(f1);
        let p2 = trace(f2);
        let combined: Vec<f64> = p1.iter().zip(&p2).map(|(x, y)| a * x + b * y).collect();
        let m1 = measure(p1);
        let m2 = measure(p2);
        let mc = measure(combined);
        let scale = m1.iter().chain(&m2).fold(1e-12f64, |m, v| m.max(v.abs()));
        for n in 0..mc.len() {
            prop_assert!((mc[n] - (a * m1[n] + b * m2[n])).abs() < 1e-10 * scale);
        }
    }
}
