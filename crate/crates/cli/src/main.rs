use std::path::PathBuf;
use std::process::ExitCode;

use adjoint_sensing::experiments::{
    epsilon_psi_curve, table1, table2, verify, write_curve, write_estimate, write_experiment,
    write_report, write_table1, write_table2, write_trajectory, ReportWriter, Scenario,
    ScenarioConfig, SensorsSection, VerifyKind,
};
use adjoint_sensing::trajectory::SensorTrajectory;
use adjoint_sensing::velocity::store_series;
use adjoint_sensing::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

#[derive(Parser)]
#[command(
    name = "adjsense",
    version,
    about = "Adjoint source estimation and sensor trajectory optimization"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the scenario.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the velocity field and random-walk starts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the scenario velocity and store it as an ADJV series.
    GenVelocity,
    /// Measure the truth source with the configured sensors.
    Forward,
    /// Reconstruct the source intensity from twin measurements.
    Estimate,
    /// Optimize a moving sensor's trajectory.
    Optimize {
        /// Also score this many iterates by estimation (epsilon-psi curve).
        #[arg(long, default_value_t = 0)]
        snapshots: usize,
    },
    /// Run a self-contained adjoint or gradient check.
    Verify {
        #[arg(long, value_enum, default_value_t = Check::All)]
        kind: Check,
    },
    /// Run the configured experiment end to end.
    Experiment,
    /// Weight-ratio sweep for circular and random starts.
    Table1 {
        /// Seeds to sweep; `--seed N` selects N and N+1.
        #[arg(long, value_delimiter = ',', default_values_t = [7u64, 8])]
        seeds: Vec<u64>,
    },
    /// Single, array and moving sensors across source frequencies.
    Table2 {
        #[arg(long, default_value_t = 17)]
        count: usize,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        /// Iterates of the moving-sensor run scored for the epsilon-psi curve.
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Duality,
    GradientPhi,
    GradientTrajectory,
    All,
}

fn load_config(g: &Global) -> Result<ScenarioConfig> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config PATH".into()))?;
    let cfg = ScenarioConfig::load(path)?;
    Ok(match g.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn out_dir(g: &Global, cfg: Option<&ScenarioConfig>) -> PathBuf {
    g.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn finish(w: ReportWriter, scenario: &Scenario) -> Result<()> {
    let dir = w.dir().to_path_buf();
    let t = scenario.time();
    let m = w.finish(&scenario.config, t.steps(), t.dt())?;
    println!(
        "wrote {} files to {} (manifest {}, {:.1} s)",
        m.files.len(),
        dir.display(),
        &m.scenario_hash[..12],
        m.wall_clock_seconds
    );
    Ok(())
}

fn sensors_for(scenario: &Scenario) -> Result<Vec<SensorTrajectory>> {
    match scenario.stationary_layout()? {
        Some(s) => Ok(s),
        None => Ok(vec![scenario.initial_trajectory()?]),
    }
}

fn gen_velocity(g: &Global) -> Result<()> {
    let cfg = load_config(g)?;
    let dir = out_dir(g, Some(&cfg));
    let mut w = ReportWriter::new(&dir, "gen-velocity", &cfg)?;
    let scenario = Scenario::prepare(cfg)?;
    let time = *scenario.time();
    let series = scenario.problem.velocity();
    store_series(series, &dir.join("velocity.adjv"))?;
    w.register("velocity.adjv");
    println!(
        "{} snapshots, dt = {:.4e}, Courant {:.3}",
        series.len(),
        time.dt(),
        series.courant(time.dt())
    );
    finish(w, &scenario)
}

fn forward(g: &Global) -> Result<()> {
    let cfg = load_config(g)?;
    let mut w = ReportWriter::new(&out_dir(g, Some(&cfg)), "forward", &cfg)?;
    let scenario = Scenario::prepare(cfg)?;
    let sensors = sensors_for(&scenario)?;
    let m = scenario.measure(&sensors)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..m.len()).map(|k| format!("sensor_{k}")));
    let time = scenario.time();
    let rows: Vec<Vec<f64>> = (0..time.len())
        .map(|n| {
            let mut r = vec![time.time(n)];
            r.extend(m.iter().map(|s| s.values[n]));
            r
        })
        .collect();
    w.table("measurements.csv", &header, &rows)?;
    finish(w, &scenario)
}

fn estimate(g: &Global) -> Result<()> {
    let cfg = load_config(g)?;
    let mut w = ReportWriter::new(&out_dir(g, Some(&cfg)), "estimate", &cfg)?;
    let scenario = Scenario::prepare(cfg)?;
    let sensors = sensors_for(&scenario)?;
    let e = scenario.estimate(&sensors)?;
    write_estimate(&mut w, "", &e)?;
    println!("psi_phi = {:.4}, l2_norm = {:.4}", e.psi_phi, e.l2_norm);
    finish(w, &scenario)
}

fn optimize(g: &Global, snapshots: usize) -> Result<()> {
    let cfg = load_config(g)?;
    let mut w = ReportWriter::new(&out_dir(g, Some(&cfg)), "optimize", &cfg)?;
    let scenario = Scenario::prepare(cfg)?;
    let init = scenario.initial_trajectory()?;
    let opt = scenario.optimize_configured(&init)?;
    write_trajectory(&mut w, "trajectory.csv", opt.report.best_trajectory())?;
    write_report(&mut w, "report.csv", &opt.report)?;
    if let Some(c) = &opt.calibration {
        write_report(&mut w, "calibration_report.csv", c)?;
    }
    println!(
        "epsilon {:.4} -> {:.4} ({:?} after {} iterations)",
        opt.report.initial_epsilon(),
        opt.report.best_epsilon(),
        opt.report.stop,
        opt.report.iterations.len() - 1
    );
    if snapshots > 0 {
        let (summaries, curve) = epsilon_psi_curve(&scenario, &opt.report, snapshots)?;
        write_curve(&mut w, "curve.csv", &summaries)?;
        println!("Spearman(epsilon, psi) = {:.3}", curve.spearman);
    }
    finish(w, &scenario)
}

fn run_verify(g: &Global, check: Check) -> Result<()> {
    let kinds: Vec<VerifyKind> = match check {
        Check::Duality => vec![VerifyKind::Duality],
        Check::GradientPhi => vec![VerifyKind::GradientPhi],
        Check::GradientTrajectory => vec![VerifyKind::GradientTrajectory],
        Check::All => VerifyKind::ALL.to_vec(),
    };
    let seed = g.seed.unwrap_or(1);
    let mut failed = None;
    for k in kinds {
        let r = verify(k, seed)?;
        println!(
            "{:20} {}  worst {:.3e}  threshold {:.1e}  residuals {:?}",
            k.label(),
            if r.passed { "PASS" } else { "FAIL" },
            r.worst,
            r.threshold,
            r.residuals
                .iter()
                .map(|v| format!("{v:.2e}"))
                .collect::<Vec<_>>()
        );
        if let Err(e) = r.check() {
            failed.get_or_insert(e);
        }
    }
    failed.map_or(Ok(()), Err)
}

fn experiment(g: &Global) -> Result<()> {
    let cfg = load_config(g)?;
    let mut w = ReportWriter::new(&out_dir(g, Some(&cfg)), "experiment", &cfg)?;
    let scenario = Scenario::prepare(cfg)?;
    let outcome = scenario.run()?;
    write_experiment(&mut w, &scenario, &outcome)?;
    println!(
        "epsilon = {:.4}, psi_phi = {:.4}, l2_norm = {:.4}",
        outcome.epsilon, outcome.estimate.psi_phi, outcome.estimate.l2_norm
    );
    finish(w, &scenario)
}

fn run_table1(g: &Global, seeds: Vec<u64>) -> Result<()> {
    let mut cfg = load_config(g)?;
    let seeds = match g.seed {
        Some(s) => vec![s, s + 1],
        None => seeds,
    };
    cfg.sensors = SensorsSection::Moving;
    let mut w = ReportWriter::new(&out_dir(g, Some(&cfg)), "table1", &cfg)?;
    let blocks = table1(&cfg, &seeds)?;
    let scenario = Scenario::prepare(cfg.with_seed(seeds[0]))?;
    write_table1(&mut w, &blocks)?;
    for b in &blocks {
        println!("{} start, seed {}", b.start.label(), b.seed);
        println!(
            "  {:8} {:>6} {:>6} {:>8} {:>8} {:>8}",
            "case", "R21", "R31", "epsilon", "psi", "l2"
        );
        for r in &b.rows {
            println!(
                "  {:8} {:>6} {:>6} {:>8.4} {:>8.4} {:>8.4}",
                r.case, r.r21, r.r31, r.epsilon, r.psi_phi, r.l2_norm
            );
        }
    }
    finish(w, &scenario)
}

fn run_table2(g: &Global, count: usize, threshold: f64, snapshots: usize) -> Result<()> {
    let cfg = load_config(g)?;
    let mut w = ReportWriter::new(&out_dir(g, Some(&cfg)), "table2", &cfg)?;
    let mut scenario = Scenario::prepare(cfg)?;
    let t = table2(&mut scenario, count, threshold)?;
    write_table2(&mut w, &t)?;
    println!(
        "  {:>4} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "f", "single", "l2", "array", "l2", "moving", "l2"
    );
    for r in &t.rows {
        println!(
            "  {:>4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.frequency,
            r.single_psi,
            r.single_l2,
            r.array_psi,
            r.array_l2,
            r.moving_psi,
            r.moving_l2
        );
    }
    if snapshots > 0 {
        let (summaries, curve) = epsilon_psi_curve(&scenario, &t.moving, snapshots)?;
        write_curve(&mut w, "curve.csv", &summaries)?;
        println!("Spearman(epsilon, psi) = {:.3}", curve.spearman);
    }
    finish(w, &scenario)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::GenVelocity => gen_velocity(g),
        Command::Forward => forward(g),
        Command::Estimate => estimate(g),
        Command::Optimize { snapshots } => optimize(g, snapshots),
        Command::Verify { kind } => run_verify(g, kind),
        Command::Experiment => experiment(g),
        Command::Table1 { seeds } => run_table1(g, seeds),
        Command::Table2 {
            count,
            threshold,
            snapshots,
        } => run_table2(g, count, threshold, snapshots),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            info!("exit status {}", e.exit_code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
