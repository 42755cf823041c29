use std::sync::Arc;

use adjoint_sensing::domain::{Grid, GridConfig, MollifiedDelta};
use adjoint_sensing::time::TimeAxis;
use adjoint_sensing::trajectory::{make_initial_trajectory, InitialTrajectory, SensorTrajectory};
use adjoint_sensing::transport::{
    solve_adjoint, solve_forward, SensorSet, SourceSpec, TransportProblem,
};
use adjoint_sensing::velocity::{synthesize_velocity, VelocityProviderSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn adjoint_is_transpose_of_forward() {
    let grid = Arc::new(Grid::new(&GridConfig::channel_2d(32, 16, 4.0, 0.0, 0.35)).unwrap());
    let time = TimeAxis::from_steps(0.3, 50);
    let spec = VelocityProviderSpec::frozen_fourier(4.0, 1.0, 8, 42);
    let vel = Arc::new(synthesize_velocity(&spec, &grid, &time).unwrap());
    let p = TransportProblem::new(vel, 50.0, time).unwrap();
    let beta = MollifiedDelta::default_beta(&grid);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phi: Vec<f64> = (0..time.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let source = SourceSpec::new(vec![0.8, 0.1], beta, phi.clone()).unwrap();
    let moving = make_initial_trajectory(
        &InitialTrajectory::RandomWalk {
            seed: 9,
            step: 0.03,
            bound: 0.3,
        },
        &grid,
        &time,
        2.6,
    )
    .unwrap();
    let fixed = SensorTrajectory::stationary(time, vec![1.9, -0.2]);
    let trajs = [moving, fixed];
    let sensors = SensorSet::new(&grid, &trajs, beta, &[]).unwrap();
    let w: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..time.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();

    let fwd = solve_forward(&p, &source, &sensors, false).unwrap();
    let adj = solve_adjoint(&p, &source.stencil(&grid).unwrap(), &w, &sensors, false).unwrap();

    let tau = time.weights();
    let lhs: f64 = (0..time.len())
        .map(|n| tau[n] * phi[n] * adj.record.trace()[n])
        .sum();
    let rhs: f64 = (0..time.len())
        .map(|n| {
            tau[n]
                * (0..2)
                    .map(|k| w[k][n] * fwd.measurements[k].values[n])
                    .sum::<f64>()
        })
        .sum();
    let rel = (lhs - rhs).abs() / rhs.abs();
    assert!(rel < 1e-10, "lhs {lhs} rhs {rhs} rel {rel}");
}
