//! Acceptance suite. Each test prints one `criterion N PASS|FAIL` line to
//! stderr and then asserts. Tests take a shared lock so that wall-clock
//! budgets are measured without competing for cores.

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use adjoint_sensing::experiments::{
    epsilon_psi_curve, table1, table2, verify, Scenario, ScenarioConfig, Table1Block, Table2,
    VerifyKind,
};
use adjoint_sensing::metrics;
use adjoint_sensing::trajectory::SensorTrajectory;
use adjoint_sensing::trajopt::{OptStop, TrajOptReport};
use adjoint_sensing::transport::{solve_forward, SourceSpec};
use nalgebra::{DMatrix, DVector};

const SEEDS: [u64; 2] = [7, 8];

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: usize, pass: bool, detail: &str) {
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n:2} {}  {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&config_dir().join(name)).unwrap()
}

struct Table1Run {
    blocks: Vec<Table1Block>,
    elapsed: Duration,
}

fn table1_run() -> &'static Table1Run {
    static RUN: OnceLock<Table1Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let t0 = Instant::now();
        let blocks = table1(&load("table.toml"), &SEEDS).unwrap();
        Table1Run {
            blocks,
            elapsed: t0.elapsed(),
        }
    })
}

struct Table2Run {
    scenario: Scenario,
    table: Table2,
    elapsed: Duration,
}

fn table2_run() -> &'static Table2Run {
    static RUN: OnceLock<Table2Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let t0 = Instant::now();
        let mut scenario = Scenario::prepare(load("table.toml").with_seed(SEEDS[0])).unwrap();
        let table = table2(&mut scenario, 17, 0.1).unwrap();
        Table2Run {
            scenario,
            table,
            elapsed: t0.elapsed(),
        }
    })
}

fn verify_within(n: usize, kind: VerifyKind, budget: Duration) {
    let _g = serial();
    let t0 = Instant::now();
    let r = verify(kind, 1).unwrap();
    let elapsed = t0.elapsed();
    let pass = r.passed && elapsed < budget;
    report(
        n,
        pass,
        &format!(
            "{}: worst residual {:.3e} (< {:.0e}), {:.2} s (< {} s)",
            kind.label(),
            r.worst,
            r.threshold,
            elapsed.as_secs_f64(),
            budget.as_secs()
        ),
    );
    assert!(pass, "{r:?}");
}

#[test]
fn criterion_01_duality() {
    verify_within(1, VerifyKind::Duality, Duration::from_secs(5));
}

#[test]
fn criterion_02_phi_gradient() {
    verify_within(2, VerifyKind::GradientPhi, Duration::from_secs(30));
}

#[test]
fn criterion_03_trajectory_gradient() {
    verify_within(3, VerifyKind::GradientTrajectory, Duration::from_secs(120));
}

fn sensors_of(s: &Scenario) -> Vec<SensorTrajectory> {
    s.stationary_layout()
        .unwrap()
        .unwrap_or_else(|| vec![s.initial_trajectory().unwrap()])
}

fn non_increasing(j: &[f64]) -> bool {
    j.windows(2).all(|w| w[1] <= w[0])
}

#[test]
fn criterion_04_monotone_estimation() {
    let _g = serial();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(config_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    let mut bad = Vec::new();
    let mut iterations = 0;
    for p in &paths {
        let s = Scenario::prepare(ScenarioConfig::load(p).unwrap()).unwrap();
        let e = s.estimate(&sensors_of(&s)).unwrap();
        iterations += e.result.iterations();
        if !non_increasing(&e.result.j_history) {
            bad.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    let pass = bad.is_empty() && !paths.is_empty();
    report(
        4,
        pass,
        &format!(
            "{} shipped scenarios, {iterations} descent iterations, non-monotone: {bad:?}",
            paths.len()
        ),
    );
    assert!(pass);
}

/// Weighted minimum-norm least-squares intensity from the explicit
/// source-to-measurement matrix, one forward solve per column.
fn normal_equations_oracle(s: &Scenario, traj: &SensorTrajectory) -> Vec<f64> {
    let time = *s.time();
    let n = time.len();
    let sensors = s.sensor_set(std::slice::from_ref(traj)).unwrap();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let src = SourceSpec::new(s.truth.center.clone(), s.beta, e).unwrap();
        let m = &solve_forward(&s.problem, &src, &sensors, false)
            .unwrap()
            .measurements[0];
        g.set_column(j, &DVector::from_column_slice(&m.values));
    }
    let observed = &s.measure(std::slice::from_ref(traj)).unwrap()[0].values;
    // Trapezoidal weights turn the discrete problem into an unweighted one.
    let w: Vec<f64> = time.weights().iter().map(|t| t.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| w[i] * g[(i, j)] / w[j]);
    let b = DVector::from_fn(n, |i, _| w[i] * observed[i]);
    let svd = a.svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let x = svd.solve(&b, tol).unwrap();
    (0..n).map(|j| x[j] / w[j]).collect()
}

#[test]
fn criterion_05_known_flow_recovery() {
    let _g = serial();
    let t0 = Instant::now();
    let s = Scenario::prepare(load("uniform_recovery.toml")).unwrap();
    let traj = s.stationary(0.0);
    let e = s.estimate(std::slice::from_ref(&traj)).unwrap();
    let oracle = normal_equations_oracle(&s, &traj);
    let n = e.window.len();
    let gap = metrics::l2_norm(&e.window, &oracle[..n], &e.result.phi[..n]).unwrap();
    let oracle_l2 = metrics::l2_norm(&e.window, &oracle[..n], &e.phi_true[..n]).unwrap();
    let elapsed = t0.elapsed();
    let pass = e.psi_phi >= 0.99
        && e.result.iterations() <= 200
        && gap < 1e-3
        && elapsed < Duration::from_secs(120);
    report(
        5,
        pass,
        &format!(
            "psi {:.4} (>= 0.99) in {} iterations, l2 to oracle {gap:.3e} (< 1e-3), oracle l2 to truth {oracle_l2:.3e}, {:.1} s",
            e.psi_phi,
            e.result.iterations(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_convection_delay() {
    let _g = serial();
    let mut lines = Vec::new();
    let mut pass = true;
    // The recovery grid is too coarse for a sharp onset; both flows use the
    // laminar scenario's grid.
    let grid = load("parabolic.toml").grid;
    for name in ["uniform_recovery.toml", "parabolic.toml"] {
        let mut cfg = load(name);
        cfg.grid = grid.clone();
        let s = Scenario::prepare(cfg).unwrap();
        let tc = s.convection_time();
        let onset = s
            .sensitivity(&[s.stationary(0.0)])
            .unwrap()
            .convection_delay()
            .unwrap_or(f64::NAN);
        let rel = (onset - tc).abs() / tc;
        pass &= rel <= 0.15;
        lines.push(format!(
            "{}: onset {onset:.3} vs {tc:.3} ({:+.1}%)",
            s.config.scenario.name,
            100.0 * (onset - tc) / tc
        ));
    }
    report(6, pass, &lines.join(", "));
    assert!(pass);
}

#[test]
fn criterion_07_table1_trends() {
    let _g = serial();
    let run = table1_run();
    let mut failures = Vec::new();
    for b in &run.blocks {
        let tag = format!("{} seed {}", b.start.label(), b.seed);
        let initial = b.row("initial").unwrap();
        for r in b.rows.iter().filter(|r| r.case != "initial") {
            if r.psi_phi <= initial.psi_phi {
                failures.push(format!(
                    "{tag}: {} psi {:.4} <= initial {:.4}",
                    r.case, r.psi_phi, initial.psi_phi
                ));
            }
        }
        let b2 = b.row("B2").unwrap();
        let c = b.row("C").unwrap();
        if !(c.mean_speed < b2.mean_speed && c.epsilon >= b2.epsilon) {
            failures.push(format!(
                "{tag}: C speed {:.3} eps {:.4} vs B2 speed {:.3} eps {:.4}",
                c.mean_speed, c.epsilon, b2.mean_speed, b2.epsilon
            ));
        }
    }
    for seed in SEEDS {
        let b2_min = run.blocks.iter().filter(|b| b.seed == seed).any(|b| {
            let b2 = b.row("B2").unwrap().epsilon;
            ["A", "B1", "B3", "B4"]
                .iter()
                .all(|c| b2 <= b.row(c).unwrap().epsilon)
        });
        if !b2_min {
            failures.push(format!(
                "seed {seed}: B2 is not the minimum-epsilon case for any start"
            ));
        }
    }
    let within = run.elapsed < Duration::from_secs(30 * 60);
    if !within {
        failures.push(format!("runtime {:.0} s", run.elapsed.as_secs_f64()));
    }
    let pass = failures.is_empty();
    report(
        7,
        pass,
        &format!(
            "{} blocks in {:.0} s; {}",
            run.blocks.len(),
            run.elapsed.as_secs_f64(),
            if pass {
                "all trends hold".to_string()
            } else {
                failures.join("; ")
            }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_j2_parity() {
    let _g = serial();
    let t2 = table2_run();
    let t1 = table1_run();
    let block = t1
        .blocks
        .iter()
        .find(|b| b.seed == SEEDS[0] && b.start.label() == "circular")
        .unwrap();
    let best_j1 = block
        .rows
        .iter()
        .filter(|r| r.case != "initial")
        .map(|r| r.epsilon)
        .fold(f64::INFINITY, f64::min);
    let eps_j2 = t2.table.epsilon_moving;
    let mut pass = eps_j2 <= 1.1 * best_j1 && t2.elapsed < Duration::from_secs(15 * 60);
    let mut rows = Vec::new();
    for r in &t2.table.rows {
        pass &= r.moving_psi > r.single_psi;
        rows.push(format!(
            "f={}: {:.3}>{:.3}",
            r.frequency, r.moving_psi, r.single_psi
        ));
    }
    report(
        8,
        pass,
        &format!(
            "J2 eps {eps_j2:.4} vs 1.1 x best J1 {best_j1:.4}; moving vs single psi {}; {:.0} s",
            rows.join(" "),
            t2.elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_epsilon_psi_anticorrelation() {
    let _g = serial();
    let t2 = table2_run();
    let mut scenario = Scenario::prepare(t2.scenario.config.clone()).unwrap();
    scenario
        .set_intensity(load("table.toml").source.intensity)
        .unwrap();
    let (summaries, curve) = epsilon_psi_curve(&scenario, &t2.table.moving, 10).unwrap();
    let pass = summaries.len() >= 10 && curve.spearman < 0.0;
    report(
        9,
        pass,
        &format!(
            "Spearman {:.3} over {} snapshots of the J2 run",
            curve.spearman,
            summaries.len()
        ),
    );
    assert!(pass);
}

fn mechanics_violations(label: &str, r: &TrajOptReport, scale: f64, ratio: f64) -> Vec<String> {
    let mut out = Vec::new();
    for it in r.iterations.iter().skip(1) {
        if it.fallback {
            continue;
        }
        if it.step_scale != scale {
            out.push(format!(
                "{label} it {}: step {}",
                it.iteration, it.step_scale
            ));
        }
        if it.clamped == 0 && (it.max_displacement - scale).abs() > 1e-12 * scale {
            out.push(format!(
                "{label} it {}: displacement {:.15}",
                it.iteration, it.max_displacement
            ));
        }
    }
    let last = r.iterations.last().unwrap();
    match r.stop {
        OptStop::Converged => {
            if !(last.dj_ratio.is_some_and(|d| d.abs() < ratio)) {
                out.push(format!("{label}: converged with ratio {:?}", last.dj_ratio));
            }
        }
        OptStop::MaxIterations => {
            let early = r.iterations[..r.iterations.len() - 1]
                .iter()
                .skip(1)
                .any(|it| it.dj_ratio.is_some_and(|d| d.abs() < ratio));
            if early {
                out.push(format!("{label}: ran past a converged iterate"));
            }
        }
        OptStop::ZeroDirection => {}
    }
    out
}

#[test]
fn criterion_10_descent_mechanics() {
    let _g = serial();
    let cfg = load("table.toml").optimizer.descent;
    let mut reports: Vec<(String, &TrajOptReport)> =
        vec![("table2 J2".into(), &table2_run().table.moving)];
    for b in &table1_run().blocks {
        for (row, r) in b.rows.iter().zip(&b.reports) {
            reports.push((
                format!("{} seed {} {}", b.start.label(), b.seed, row.case),
                r,
            ));
        }
    }
    let mut checked = 0;
    let mut exempt = 0;
    let mut bad = Vec::new();
    for (label, r) in &reports {
        for it in r.iterations.iter().skip(1).filter(|it| !it.fallback) {
            if it.clamped == 0 {
                checked += 1;
            } else {
                exempt += 1;
            }
        }
        bad.extend(mechanics_violations(
            label,
            r,
            cfg.step_scale,
            cfg.convergence_ratio,
        ));
    }
    let pass = bad.is_empty() && checked > 0;
    report(
        10,
        pass,
        &format!(
            "{} runs, {checked} full-step iterations at displacement {}, {exempt} wall-clamped; {}",
            reports.len(),
            cfg.step_scale,
            if bad.is_empty() {
                "stopping rule respected".to_string()
            } else {
                bad.join("; ")
            }
        ),
    );
    assert!(pass);
}
