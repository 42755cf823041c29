use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::ScenarioConfig;
use super::manifest::{file_entry, scenario_hash, RunManifest, Seeds, TOOL_VERSION};
use super::pipeline::{Estimate, ExperimentOutcome, Scenario};
use super::tables::{Table1Block, Table2};
use crate::error::Result;
use crate::metrics::PerformanceSummary;
use crate::trajectory::{InitialTrajectory, SensorTrajectory};
use crate::trajopt::TrajOptReport;

/// Writes the files of one run and collects them into a manifest.
pub struct ReportWriter {
    dir: PathBuf,
    command: String,
    hash: String,
    files: Vec<String>,
    started: Instant,
}

impl ReportWriter {
    pub fn new(dir: &Path, command: &str, config: &ScenarioConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut w = Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            hash: scenario_hash(command, config),
            files: Vec::new(),
            started: Instant::now(),
        };
        w.text("scenario.toml", &config.to_toml_string())?;
        Ok(w)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// CSV with a `# manifest <hash>` line followed by a header row.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let mut f = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(f, "# manifest {}", self.hash)?;
        let mut w = csv::Writer::from_writer(f);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// CSV with an explicit header and numeric rows.
    pub fn table(&mut self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
        let mut f = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(f, "# manifest {}", self.hash)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Register a file written by someone else.
    pub fn register(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    pub fn finish(self, config: &ScenarioConfig, steps: usize, dt: f64) -> Result<RunManifest> {
        let files = self
            .files
            .iter()
            .map(|f| file_entry(&self.dir, f))
            .collect::<Result<_>>()?;
        let trajectory = match config.initial_trajectory() {
            InitialTrajectory::RandomWalk { seed, .. } => Some(seed),
            _ => None,
        };
        let manifest = RunManifest {
            command: self.command,
            scenario_hash: self.hash,
            tool_version: TOOL_VERSION.to_string(),
            seeds: Seeds {
                velocity: config.velocity_spec().seed,
                trajectory,
            },
            steps,
            dt,
            files,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(manifest)
    }
}

#[derive(Serialize)]
struct PhiRow {
    t: f64,
    phi_true: f64,
    phi_est: f64,
}

#[derive(Serialize)]
struct ConvergenceRow {
    iteration: usize,
    #[serde(rename = "J")]
    j: f64,
    grad_norm: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Serialize)]
struct ReportRow {
    iteration: usize,
    #[serde(rename = "J_total")]
    j_total: f64,
    #[serde(rename = "J_term1")]
    j_term1: Option<f64>,
    #[serde(rename = "J_term2")]
    j_term2: Option<f64>,
    #[serde(rename = "J_term3")]
    j_term3: Option<f64>,
    epsilon: f64,
    #[serde(rename = "dJ_ratio")]
    dj_ratio: Option<f64>,
    max_displacement: f64,
    step_scale: f64,
    fallback: bool,
    clamped: usize,
}

#[derive(Serialize)]
pub struct SummaryRow {
    pub case: String,
    #[serde(rename = "R21")]
    pub r21: Option<f64>,
    #[serde(rename = "R31")]
    pub r31: Option<f64>,
    pub epsilon: f64,
    pub psi_phi: f64,
    pub l2_norm: f64,
}

#[derive(Serialize)]
struct SensorRow {
    sensor: usize,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct CurveRow {
    iteration: Option<usize>,
    epsilon: f64,
    psi_phi: f64,
    l2_norm: f64,
}

pub fn write_estimate(w: &mut ReportWriter, prefix: &str, e: &Estimate) -> Result<()> {
    let rows: Vec<PhiRow> = e
        .phi_true
        .iter()
        .zip(&e.result.phi)
        .enumerate()
        .map(|(n, (a, b))| PhiRow {
            t: n as f64 * e.window.dt(),
            phi_true: *a,
            phi_est: *b,
        })
        .collect();
    w.csv(&format!("{prefix}phi.csv"), &rows)?;
    let r = &e.result;
    let conv: Vec<ConvergenceRow> = r
        .j_history
        .iter()
        .enumerate()
        .map(|(k, &j)| ConvergenceRow {
            iteration: k,
            j,
            grad_norm: r.grad_norms.get(k).copied(),
            alpha: r.alphas.get(k).copied(),
        })
        .collect();
    w.csv(&format!("{prefix}estimation.csv"), &conv)
}

pub fn write_trajectory(w: &mut ReportWriter, name: &str, traj: &SensorTrajectory) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        t: f64,
        x: f64,
        y: f64,
    }
    let rows: Vec<Row> = (0..traj.len())
        .map(|n| Row {
            t: traj.time().time(n),
            x: traj.point(n)[0],
            y: traj.point(n)[1],
        })
        .collect();
    w.csv(name, &rows)
}

pub fn write_report(w: &mut ReportWriter, name: &str, report: &TrajOptReport) -> Result<()> {
    let rows: Vec<ReportRow> = report
        .iterations
        .iter()
        .map(|it| ReportRow {
            iteration: it.iteration,
            j_total: it.j,
            j_term1: it.terms.map(|t| t.term1),
            j_term2: it.terms.map(|t| t.term2),
            j_term3: it.terms.map(|t| t.term3),
            epsilon: it.epsilon,
            dj_ratio: it.dj_ratio,
            max_displacement: it.max_displacement,
            step_scale: it.step_scale,
            fallback: it.fallback,
            clamped: it.clamped,
        })
        .collect();
    w.csv(name, &rows)
}

pub fn write_curve(
    w: &mut ReportWriter,
    name: &str,
    summaries: &[PerformanceSummary],
) -> Result<()> {
    let rows: Vec<CurveRow> = summaries
        .iter()
        .map(|s| CurveRow {
            iteration: s.iteration,
            epsilon: s.epsilon,
            psi_phi: s.psi_phi,
            l2_norm: s.l2_norm,
        })
        .collect();
    w.csv(name, &rows)
}

/// Every file of a single experiment.
pub fn write_experiment(
    w: &mut ReportWriter,
    scenario: &Scenario,
    outcome: &ExperimentOutcome,
) -> Result<()> {
    write_estimate(w, "", &outcome.estimate)?;
    match &outcome.optimization {
        Some(o) => {
            write_trajectory(w, "trajectory.csv", o.report.best_trajectory())?;
            write_report(w, "report.csv", &o.report)?;
            if let Some(c) = &o.calibration {
                write_report(w, "calibration_report.csv", c)?;
            }
        }
        None => {
            let rows: Vec<SensorRow> = outcome
                .sensors
                .iter()
                .enumerate()
                .map(|(k, s)| SensorRow {
                    sensor: k,
                    x: s.point(0)[0],
                    y: s.point(0)[1],
                })
                .collect();
            w.csv("sensors.csv", &rows)?;
        }
    }
    let (r21, r31) = match &outcome.optimization {
        Some(_) => (
            Some(scenario.config.optimizer.r21),
            Some(scenario.config.optimizer.r31),
        ),
        None => (None, None),
    };
    w.csv(
        "summary.csv",
        &[SummaryRow {
            case: scenario.config.scenario.name.clone(),
            r21,
            r31,
            epsilon: outcome.epsilon,
            psi_phi: outcome.estimate.psi_phi,
            l2_norm: outcome.estimate.l2_norm,
        }],
    )
}

pub fn write_table1(w: &mut ReportWriter, blocks: &[Table1Block]) -> Result<()> {
    for b in blocks {
        let tag = format!("{}_seed{}", b.start.label(), b.seed);
        let rows: Vec<SummaryRow> = b
            .rows
            .iter()
            .map(|r| SummaryRow {
                case: r.case.clone(),
                r21: (!r.r21.is_nan()).then_some(r.r21),
                r31: (!r.r31.is_nan()).then_some(r.r31),
                epsilon: r.epsilon,
                psi_phi: r.psi_phi,
                l2_norm: r.l2_norm,
            })
            .collect();
        w.csv(&format!("table1_{tag}.csv"), &rows)?;
        for (row, report) in b.rows.iter().zip(&b.reports) {
            write_trajectory(
                w,
                &format!("trajectory_{tag}_{}.csv", row.case),
                report.best_trajectory(),
            )?;
            write_report(w, &format!("report_{tag}_{}.csv", row.case), report)?;
        }
    }
    Ok(())
}

pub fn write_table2(w: &mut ReportWriter, t: &Table2) -> Result<()> {
    w.csv("table2.csv", &t.rows)?;
    #[derive(Serialize)]
    struct EpsilonRow {
        case: &'static str,
        epsilon: f64,
    }
    w.csv(
        "table2_epsilon.csv",
        &[
            EpsilonRow {
                case: "single",
                epsilon: t.epsilon_single,
            },
            EpsilonRow {
                case: "array",
                epsilon: t.epsilon_array,
            },
            EpsilonRow {
                case: "moving-j2",
                epsilon: t.epsilon_moving,
            },
        ],
    )?;
    #[derive(Serialize)]
    struct ArrayRow {
        sensor: usize,
        y: f64,
    }
    let rows: Vec<ArrayRow> = t
        .array
        .iter()
        .enumerate()
        .map(|(sensor, &y)| ArrayRow { sensor, y })
        .collect();
    w.csv("array.csv", &rows)?;
    write_trajectory(w, "trajectory_j2.csv", t.moving.best_trajectory())?;
    write_report(w, "report_j2.csv", &t.moving)
}
