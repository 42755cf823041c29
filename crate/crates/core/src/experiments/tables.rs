use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ScenarioConfig;
use super::pipeline::{Estimate, Scenario};
use crate::error::{Result, StageExt};
use crate::metrics::{self, PerformanceCurve, PerformanceSummary};
use crate::trajectory::{make_initial_trajectory, InitialTrajectory, SensorTrajectory};
use crate::trajopt::{calibrate_alphas, Alphas, CostKind, TrajOptReport};
use crate::transport::Intensity;

/// Weight ratios of the optimized rows, in table order.
pub const TABLE1_CASES: [(&str, f64, f64); 6] = [
    ("A", 0.0, 0.0),
    ("B1", 0.1, 0.0),
    ("B2", 1.0, 0.0),
    ("B3", 10.0, 0.0),
    ("B4", f64::INFINITY, 0.0),
    ("C", 1.0, 1.0),
];

pub const TABLE2_FREQUENCIES: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    Circular,
    Random,
}

impl Start {
    pub fn label(self) -> &'static str {
        match self {
            Start::Circular => "circular",
            Start::Random => "random",
        }
    }

    /// Starting path of this kind, taking shape parameters from `base` when
    /// it already is of the same kind.
    pub fn initial(self, base: &InitialTrajectory, seed: u64) -> InitialTrajectory {
        match (self, base) {
            (Start::Circular, c @ InitialTrajectory::Circular { .. }) => c.clone(),
            (Start::Circular, _) => InitialTrajectory::Circular {
                radius: 0.2,
                revolutions: 1.0,
            },
            (Start::Random, InitialTrajectory::RandomWalk { step, bound, .. }) => {
                InitialTrajectory::RandomWalk {
                    seed,
                    step: *step,
                    bound: *bound,
                }
            }
            (Start::Random, _) => InitialTrajectory::RandomWalk {
                seed,
                step: 0.01,
                bound: 0.3,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub case: String,
    pub r21: f64,
    pub r31: f64,
    pub epsilon: f64,
    pub psi_phi: f64,
    pub l2_norm: f64,
    /// Time-mean sensor speed of the scored trajectory.
    pub mean_speed: f64,
}

/// All rows for one start and one seed.
#[derive(Clone, Debug)]
pub struct Table1Block {
    pub start: Start,
    pub seed: u64,
    /// Optimized rows in [`TABLE1_CASES`] order, then the initial row.
    pub rows: Vec<Table1Row>,
    pub alphas: Vec<Alphas>,
    pub reports: Vec<TrajOptReport>,
    pub estimates: Vec<Estimate>,
}

impl Table1Block {
    pub fn row(&self, case: &str) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.case == case)
    }
}

fn row(
    case: &str,
    r21: f64,
    r31: f64,
    epsilon: f64,
    traj: &SensorTrajectory,
    e: &Estimate,
) -> Table1Row {
    Table1Row {
        case: case.into(),
        r21,
        r31,
        epsilon,
        psi_phi: e.psi_phi,
        l2_norm: e.l2_norm,
        mean_speed: traj.mean_speed(),
    }
}

/// Run the mean-only case, calibrate the weights of the other cases on it
/// and score every case plus the initial trajectory.
pub fn table1_block(scenario: &Scenario, start: Start, seed: u64) -> Result<Table1Block> {
    let kind = start.initial(&scenario.config.optimizer.descent.initial, seed);
    let init = make_initial_trajectory(&kind, &scenario.grid, scenario.time(), scenario.plane())
        .stage("initial trajectory")?;
    let mut rows = Vec::new();
    let mut alphas = Vec::new();
    let mut reports: Vec<TrajOptReport> = Vec::new();
    let mut estimates = Vec::new();
    for (case, r21, r31) in TABLE1_CASES {
        let a = if case == "A" {
            Alphas::MEAN_ONLY
        } else {
            let case_a = &reports[0];
            calibrate_alphas(r21, r31, case_a.best_record(), case_a.best_trajectory())
                .stage("alpha calibration")?
        };
        info!(
            "table 1, {} start, seed {seed}: case {case} with {a:?}",
            start.label()
        );
        let mut cfg = scenario.trajopt_config(CostKind::J1, a);
        cfg.initial = kind.clone();
        let report = scenario.optimize(&init, &cfg)?;
        let best = report.best_trajectory();
        let e = scenario.estimate(std::slice::from_ref(best))?;
        rows.push(row(case, r21, r31, report.best_epsilon(), best, &e));
        alphas.push(a);
        reports.push(report);
        estimates.push(e);
    }
    let eps0 = reports[0].initial_epsilon();
    let e = scenario.estimate(std::slice::from_ref(&init))?;
    rows.push(row("initial", f64::NAN, f64::NAN, eps0, &init, &e));
    estimates.push(e);
    Ok(Table1Block {
        start,
        seed,
        rows,
        alphas,
        reports,
        estimates,
    })
}

/// Scenario for one seed of a table run.
pub fn seeded_scenario(base: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    Scenario::prepare(base.clone().with_seed(seed))
}

/// Table 1 for both starts over every seed.
pub fn table1(base: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<Table1Block>> {
    let scenarios: Vec<Scenario> = seeds
        .iter()
        .map(|&s| seeded_scenario(base, s))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, Start)> = (0..seeds.len())
        .flat_map(|k| [(k, Start::Circular), (k, Start::Random)])
        .collect();
    jobs.par_iter()
        .map(|&(k, start)| table1_block(&scenarios[k], start, seeds[k]))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Table2Row {
    pub frequency: f64,
    pub single_psi: f64,
    pub single_l2: f64,
    pub array_psi: f64,
    pub array_l2: f64,
    pub moving_psi: f64,
    pub moving_l2: f64,
}

#[derive(Clone, Debug)]
pub struct Table2 {
    pub rows: Vec<Table2Row>,
    /// Cross-stream positions of the array sensors.
    pub array: Vec<f64>,
    pub moving: TrajOptReport,
    pub epsilon_single: f64,
    pub epsilon_array: f64,
    pub epsilon_moving: f64,
}

/// Single stationary sensor, the calibrated array and a `J2`-optimized
/// moving sensor, each scored at every source frequency. Sensitivities do
/// not depend on the intensity, so the array and trajectory are computed
/// once.
pub fn table2(scenario: &mut Scenario, count: usize, threshold: f64) -> Result<Table2> {
    let single = vec![scenario.stationary(0.0)];
    let array_y = scenario
        .array_positions(count, threshold)
        .stage("array calibration")?;
    let array: Vec<SensorTrajectory> = array_y.iter().map(|&y| scenario.stationary(y)).collect();
    let init = scenario.initial_trajectory().stage("initial trajectory")?;
    let moving = scenario.optimize(
        &init,
        &scenario.trajopt_config(CostKind::J2, Alphas::MEAN_ONLY),
    )?;
    let best = vec![moving.best_trajectory().clone()];
    let eps = |trajs: &[SensorTrajectory]| -> Result<f64> {
        metrics::epsilon(&scenario.sensitivity(trajs)?)
    };
    let epsilon_single = eps(&single)?;
    let epsilon_array = eps(&array)?;
    let epsilon_moving = moving.best_epsilon();
    let mut rows = Vec::new();
    for f in TABLE2_FREQUENCIES {
        scenario.set_intensity(Intensity::Pulse { frequency: f })?;
        info!("table 2: f = {f}");
        let s = scenario.estimate(&single)?;
        let a = scenario.estimate(&array)?;
        let m = scenario.estimate(&best)?;
        rows.push(Table2Row {
            frequency: f,
            single_psi: s.psi_phi,
            single_l2: s.l2_norm,
            array_psi: a.psi_phi,
            array_l2: a.l2_norm,
            moving_psi: m.psi_phi,
            moving_l2: m.l2_norm,
        });
    }
    Ok(Table2 {
        rows,
        array: array_y,
        moving,
        epsilon_single,
        epsilon_array,
        epsilon_moving,
    })
}

/// Iterations at which `snapshots` estimates are taken along a report:
/// evenly spaced, always including the first and last iterate.
pub fn snapshot_iterations(report: &TrajOptReport, snapshots: usize) -> Vec<usize> {
    let last = report.iterations.len() - 1;
    let k = snapshots.max(2).min(last + 1);
    let mut its: Vec<usize> = (0..k)
        .map(|i| ((i as f64) * last as f64 / (k - 1) as f64).round() as usize)
        .collect();
    its.dedup();
    its
}

/// Estimation quality against the adjoint ratio along one optimization.
pub fn epsilon_psi_curve(
    scenario: &Scenario,
    report: &TrajOptReport,
    snapshots: usize,
) -> Result<(Vec<PerformanceSummary>, PerformanceCurve)> {
    let mut out = Vec::new();
    for it in snapshot_iterations(report, snapshots) {
        let e = scenario.estimate(std::slice::from_ref(&report.trajectories[it]))?;
        out.push(PerformanceSummary {
            epsilon: report.iterations[it].epsilon,
            psi_phi: e.psi_phi,
            l2_norm: e.l2_norm,
            scenario: scenario.config.scenario.name.clone(),
            iteration: Some(it),
        });
    }
    let curve = metrics::epsilon_performance_curve(&out)?;
    Ok((out, curve))
}
