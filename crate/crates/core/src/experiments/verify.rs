use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Grid, GridConfig, MollifiedDelta};
use crate::error::{Error, Result};
use crate::estimation::cost_j;
use crate::time::TimeAxis;
use crate::trajectory::{make_initial_trajectory, InitialTrajectory, SensorTrajectory};
use crate::trajopt::{Alphas, CostKind, TrajOptConfig, TrajOptContext};
use crate::transport::{
    pulse_trace, solve_adjoint, solve_forward, SensorSet, SourceSpec, TransportProblem,
};
use crate::velocity::{synthesize_velocity, VelocityProviderSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyKind {
    Duality,
    GradientPhi,
    GradientTrajectory,
}

impl VerifyKind {
    pub const ALL: [VerifyKind; 3] = [
        VerifyKind::Duality,
        VerifyKind::GradientPhi,
        VerifyKind::GradientTrajectory,
    ];

    pub fn threshold(self) -> f64 {
        match self {
            VerifyKind::Duality => 1e-10,
            VerifyKind::GradientPhi => 1e-6,
            VerifyKind::GradientTrajectory => 1e-3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VerifyKind::Duality => "duality",
            VerifyKind::GradientPhi => "gradient-phi",
            VerifyKind::GradientTrajectory => "gradient-trajectory",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub kind: VerifyKind,
    /// Relative residual of every probe.
    pub residuals: Vec<f64>,
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl VerificationReport {
    fn new(kind: VerifyKind, residuals: Vec<f64>) -> Self {
        let worst = residuals.iter().copied().fold(0.0f64, f64::max);
        let threshold = kind.threshold();
        let passed = residuals.iter().all(|r| r.is_finite()) && worst < threshold;
        Self {
            kind,
            residuals,
            worst,
            threshold,
            passed,
        }
    }

    /// `Err(Verification)` when the check failed.
    pub fn check(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::Verification(format!(
                "{}: worst relative residual {:.3e} exceeds {:.1e}",
                self.kind.label(),
                self.worst,
                self.threshold
            )))
        }
    }
}

struct Instance {
    grid: Arc<Grid>,
    problem: TransportProblem,
    beta: f64,
}

fn instance(nx: usize, ny: usize, horizon: f64, steps: usize, seed: u64) -> Result<Instance> {
    let grid = Arc::new(Grid::new(&GridConfig::channel_2d(nx, ny, 4.0, 0.0, 0.35))?);
    let time = TimeAxis::from_steps(horizon, steps);
    let spec = VelocityProviderSpec::frozen_fourier(4.0, 1.0, 8, seed);
    let vel = Arc::new(synthesize_velocity(&spec, &grid, &time)?);
    let problem = TransportProblem::new(vel, 50.0, time)?;
    let beta = MollifiedDelta::default_beta(&grid);
    Ok(Instance {
        grid,
        problem,
        beta,
    })
}

pub fn verify(kind: VerifyKind, seed: u64) -> Result<VerificationReport> {
    match kind {
        VerifyKind::Duality => verify_duality(seed),
        VerifyKind::GradientPhi => verify_gradient_phi(seed),
        VerifyKind::GradientTrajectory => verify_gradient_trajectory(seed),
    }
}

/// Weighted measurements of a random source against the adjoint pairing on
/// a 32x16 grid over 50 steps.
pub fn verify_duality(seed: u64) -> Result<VerificationReport> {
    let s = instance(32, 16, 0.3, 50, seed)?;
    let time = *s.problem.time();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi: Vec<f64> = (0..time.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let source = SourceSpec::new(vec![0.8, 0.1], s.beta, phi.clone())?;
    let walk = InitialTrajectory::RandomWalk {
        seed,
        step: 0.03,
        bound: 0.3,
    };
    let trajs = [
        make_initial_trajectory(&walk, &s.grid, &time, 2.6)?,
        SensorTrajectory::stationary(time, vec![1.9, -0.2]),
    ];
    let sensors = SensorSet::new(&s.grid, &trajs, s.beta, &[])?;
    let w: Vec<Vec<f64>> = (0..trajs.len())
        .map(|_| (0..time.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let fwd = solve_forward(&s.problem, &source, &sensors, false)?;
    let adj = solve_adjoint(&s.problem, &source.stencil(&s.grid)?, &w, &sensors, false)?;
    let tau = time.weights();
    let pairing: f64 = (0..time.len())
        .map(|n| tau[n] * phi[n] * adj.record.trace()[n])
        .sum();
    let signal: f64 = (0..time.len())
        .map(|n| {
            tau[n]
                * w.iter()
                    .zip(&fwd.measurements)
                    .map(|(wk, m)| wk[n] * m.values[n])
                    .sum::<f64>()
        })
        .sum();
    Ok(VerificationReport::new(
        VerifyKind::Duality,
        vec![(pairing - signal).abs() / signal.abs()],
    ))
}

/// Adjoint intensity gradient against central differences of the
/// misfit along 10 random pulse perturbations.
pub fn verify_gradient_phi(seed: u64) -> Result<VerificationReport> {
    let s = instance(32, 16, 0.3, 50, seed)?;
    let time = *s.problem.time();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = vec![0.8, 0.0];
    let stencil =
        SourceSpec::new(center.clone(), s.beta, vec![0.0; time.len()])?.stencil(&s.grid)?;
    let sensors = SensorSet::new(
        &s.grid,
        &[SensorTrajectory::stationary(time, vec![2.0, 0.1])],
        s.beta,
        &[],
    )?;
    let forward = |phi: Vec<f64>| -> Result<_> {
        let src = SourceSpec::new(center.clone(), s.beta, phi)?;
        Ok(solve_forward(&s.problem, &src, &sensors, false)?.measurements)
    };
    let observed = forward(pulse_trace(&time, 4.0))?;
    let phi = pulse_trace(&time, 2.0);
    let pred = forward(phi.clone())?;
    let r: Vec<Vec<f64>> = pred
        .iter()
        .zip(&observed)
        .map(|(p, o)| p.values.iter().zip(&o.values).map(|(a, b)| a - b).collect())
        .collect();
    let g = solve_adjoint(&s.problem, &stencil, &r, &sensors, false)?.record;
    let tau = time.weights();
    let h = 1e-3;
    let mut residuals = Vec::new();
    for _ in 0..10 {
        let f = rng.gen_range(0.5..8.0);
        let shift = rng.gen_range(0.0..1.0);
        let d: Vec<f64> = time
            .times()
            .iter()
            .map(|t| (2.0 * PI * f * (t + shift)).sin())
            .collect();
        let analytic: f64 = (0..time.len()).map(|n| tau[n] * g.trace()[n] * d[n]).sum();
        let at = |e: f64| -> Result<f64> {
            let p: Vec<f64> = phi.iter().zip(&d).map(|(a, b)| a + e * b).collect();
            cost_j(&forward(p)?, &observed, &time)
        };
        let fd = (at(h)? - at(-h)?) / (2.0 * h);
        residuals.push((fd - analytic).abs() / analytic.abs());
    }
    Ok(VerificationReport::new(VerifyKind::GradientPhi, residuals))
}

/// Smooth cross-stream perturbation vanishing at both ends of the horizon.
fn smooth_direction(time: &TimeAxis, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let raw: Vec<f64> = time
        .times()
        .iter()
        .map(|t| {
            c.iter()
                .enumerate()
                .map(|(j, cj)| cj * ((j + 1) as f64 * PI * t / time.horizon()).sin())
                .sum()
        })
        .collect();
    let m = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    raw.iter().map(|v| v / m).collect()
}

/// Trajectory descent direction against central differences of the cost,
/// for both `J1` (all three terms) and `J2`, on a 64x32 grid along 5
/// smooth directions each.
pub fn verify_gradient_trajectory(seed: u64) -> Result<VerificationReport> {
    let s = instance(64, 32, 0.6, 240, seed)?;
    let time = *s.problem.time();
    let stencil =
        SourceSpec::new(vec![0.6, 0.0], s.beta, vec![0.0; time.len()])?.stencil(&s.grid)?;
    let ctx = TrajOptContext {
        problem: &s.problem,
        source: &stencil,
        beta: s.beta,
    };
    let circle = InitialTrajectory::Circular {
        radius: 0.2,
        revolutions: 1.0,
    };
    let costs = [
        TrajOptConfig::new(
            CostKind::J1,
            Alphas {
                alpha1: 1.0,
                alpha2: 2.0,
                alpha3: 1e-3,
            },
            circle.clone(),
        ),
        TrajOptConfig::new(CostKind::J2, Alphas::MEAN_ONLY, circle.clone()),
    ];
    let traj = make_initial_trajectory(&circle, &s.grid, &time, 1.8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-4;
    let mut residuals = Vec::new();
    for cfg in &costs {
        let record = ctx.sensitivity(&traj)?;
        let dir = ctx.direction(cfg, &record, &traj)?;
        let j_at = |e: f64, d: &[f64]| -> Result<f64> {
            let pts = traj
                .points()
                .iter()
                .zip(d)
                .map(|(p, dv)| vec![p[0], p[1] + e * dv])
                .collect();
            let tr = SensorTrajectory::new(time, pts)?;
            let r = ctx.sensitivity(&tr)?;
            Ok(ctx.cost(cfg, &r, &tr)?.0)
        };
        for _ in 0..5 {
            let d = smooth_direction(&time, &mut rng);
            let analytic: f64 =
                -time.dt() * (1..time.steps()).map(|n| dir[0][n] * d[n]).sum::<f64>();
            let fd = (j_at(h, &d)? - j_at(-h, &d)?) / (2.0 * h);
            residuals.push((fd - analytic).abs() / analytic.abs());
        }
    }
    Ok(VerificationReport::new(
        VerifyKind::GradientTrajectory,
        residuals,
    ))
}
