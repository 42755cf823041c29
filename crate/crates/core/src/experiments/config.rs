use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::GridConfig;
use crate::error::{Error, Result};
use crate::estimation::EstimationConfig;
use crate::trajectory::InitialTrajectory;
use crate::trajopt::{Alphas, CostKind, TrajOptConfig};
use crate::transport::{GradientSampling, Intensity, DEFAULT_SPONGE_RATE};
use crate::velocity::VelocityProviderSpec;

fn default_name() -> String {
    "scenario".into()
}

fn default_horizon() -> f64 {
    3.0
}

fn default_target_courant() -> f64 {
    0.3
}

fn default_plane() -> f64 {
    13.1
}

fn default_sponge_rate() -> f64 {
    DEFAULT_SPONGE_RATE
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Solver step; chosen from `target_courant` when omitted.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_target_courant")]
    pub target_courant: f64,
    /// Overrides the velocity seed and the random-walk seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Streamwise station of every sensor.
    #[serde(default = "default_plane")]
    pub plane: f64,
    #[serde(default = "default_sponge_rate")]
    pub sponge_rate: f64,
    /// Score estimates only on the part of the horizon whose releases reach
    /// the sensing plane before `T`.
    #[serde(default = "default_true")]
    pub observable_window: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            name: default_name(),
            horizon: default_horizon(),
            dt: None,
            target_courant: default_target_courant(),
            seed: None,
            plane: default_plane(),
            sponge_rate: default_sponge_rate(),
            observable_window: true,
        }
    }
}

fn default_nx() -> usize {
    128
}

fn default_ny() -> usize {
    17
}

fn default_length() -> f64 {
    5.0 * PI
}

fn default_x0() -> f64 {
    -0.6
}

fn default_sponge_width() -> f64 {
    1.2
}

/// Periodic streamwise axis times a wall-bounded `[-1, 1]` cross-stream axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_sponge_width")]
    pub sponge_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nx: default_nx(),
            ny: default_ny(),
            length: default_length(),
            x0: default_x0(),
            sponge_width: default_sponge_width(),
        }
    }
}

impl GridSection {
    pub fn grid_config(&self) -> GridConfig {
        GridConfig::channel_2d(self.nx, self.ny, self.length, self.x0, self.sponge_width)
    }
}

fn default_center() -> Vec<f64> {
    vec![1.1, 0.0]
}

fn default_intensity() -> Intensity {
    Intensity::Pulse { frequency: 4.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default = "default_center")]
    pub center: Vec<f64>,
    /// Mollifier sharpness shared by source and sensors; 1.5 cells standard
    /// deviation when omitted.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_intensity")]
    pub intensity: Intensity,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            center: default_center(),
            beta: None,
            intensity: default_intensity(),
        }
    }
}

fn default_points() -> Vec<Vec<f64>> {
    vec![vec![0.0]]
}

fn default_count() -> usize {
    17
}

fn default_threshold() -> f64 {
    0.1
}

/// Sensor layout in the sensing plane. Coordinates are cross-stream only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SensorsSection {
    Stationary {
        #[serde(default = "default_points")]
        points: Vec<Vec<f64>>,
    },
    /// `count` equispaced points spanning the region where the time-mean
    /// concentration of a steady release exceeds `threshold` times its peak.
    Array {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    /// One sensor whose path comes from the `[optimizer]` section.
    Moving,
}

impl Default for SensorsSection {
    fn default() -> Self {
        SensorsSection::Stationary {
            points: default_points(),
        }
    }
}

fn default_cost() -> CostKind {
    CostKind::J2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_cost")]
    pub cost: CostKind,
    /// Target ratio of the fluctuation term to the mean term; `inf` drops the
    /// mean term.
    #[serde(default)]
    pub r21: f64,
    /// Target ratio of the motion term to the mean term.
    #[serde(default)]
    pub r31: f64,
    /// Explicit weights; bypasses the ratio calibration.
    #[serde(default)]
    pub alphas: Option<Alphas>,
    #[serde(flatten)]
    pub descent: DescentSettings,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            cost: default_cost(),
            r21: 0.0,
            r31: 0.0,
            alphas: None,
            descent: DescentSettings::default(),
        }
    }
}

/// Descent controls shared by every run of an optimizer section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentSettings {
    #[serde(default = "DescentSettings::default_step_scale")]
    pub step_scale: f64,
    #[serde(default = "DescentSettings::default_convergence_ratio")]
    pub convergence_ratio: f64,
    #[serde(default = "DescentSettings::default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "DescentSettings::default_initial")]
    pub initial: InitialTrajectory,
    #[serde(default)]
    pub wall_margin: Option<f64>,
    #[serde(default)]
    pub gradient_sampling: GradientSampling,
    #[serde(default = "DescentSettings::default_halving_after")]
    pub halving_after: usize,
}

impl DescentSettings {
    fn base() -> TrajOptConfig {
        TrajOptConfig::new(
            CostKind::J2,
            Alphas::MEAN_ONLY,
            InitialTrajectory::Circular {
                radius: 0.2,
                revolutions: 1.0,
            },
        )
    }

    fn default_step_scale() -> f64 {
        Self::base().step_scale
    }

    fn default_convergence_ratio() -> f64 {
        Self::base().convergence_ratio
    }

    fn default_max_iterations() -> usize {
        Self::base().max_iterations
    }

    fn default_initial() -> InitialTrajectory {
        Self::base().initial
    }

    fn default_halving_after() -> usize {
        Self::base().halving_after
    }

    /// Optimizer settings for one cost.
    pub fn to_config(&self, cost: CostKind, alphas: Alphas) -> TrajOptConfig {
        TrajOptConfig {
            cost,
            alphas,
            step_scale: self.step_scale,
            convergence_ratio: self.convergence_ratio,
            max_iterations: self.max_iterations,
            initial: self.initial.clone(),
            wall_margin: self.wall_margin,
            gradient_sampling: self.gradient_sampling,
            halving_after: self.halving_after,
        }
    }
}

impl Default for DescentSettings {
    fn default() -> Self {
        let b = Self::base();
        Self {
            step_scale: b.step_scale,
            convergence_ratio: b.convergence_ratio,
            max_iterations: b.max_iterations,
            initial: b.initial,
            wall_margin: b.wall_margin,
            gradient_sampling: b.gradient_sampling,
            halving_after: b.halving_after,
        }
    }
}

/// Full description of one run, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub grid: GridSection,
    pub velocity: VelocityProviderSpec,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub sensors: SensorsSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub estimation: EstimationConfig,
    /// Directory for reports; the CLI's `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

const OPTIMIZER_KEYS: &[&str] = &[
    "cost",
    "r21",
    "r31",
    "alphas",
    "step_scale",
    "convergence_ratio",
    "max_iterations",
    "initial",
    "wall_margin",
    "gradient_sampling",
    "halving_after",
];

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        // Flattened sections cannot deny unknown keys through serde.
        if let Some(opt) = raw.get("optimizer").and_then(|v| v.as_table()) {
            if let Some(k) = opt.keys().find(|k| !OPTIMIZER_KEYS.contains(&k.as_str())) {
                return Err(Error::Config(format!("unknown key `{k}` in [optimizer]")));
            }
        }
        let cfg: ScenarioConfig = raw
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Replace every seed in the scenario.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = Some(seed);
        self
    }

    /// Velocity spec with the scenario seed applied.
    pub fn velocity_spec(&self) -> VelocityProviderSpec {
        let mut v = self.velocity.clone();
        if let Some(s) = self.scenario.seed {
            v.seed = s;
        }
        v
    }

    /// Initial trajectory with the scenario seed applied.
    pub fn initial_trajectory(&self) -> InitialTrajectory {
        let mut init = self.optimizer.descent.initial.clone();
        if let (Some(s), InitialTrajectory::RandomWalk { seed, .. }) =
            (self.scenario.seed, &mut init)
        {
            *seed = s;
        }
        init
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                s.horizon
            )));
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if !(s.target_courant > 0.0 && s.target_courant <= crate::transport::MAX_COURANT) {
            return Err(Error::Config(format!(
                "target_courant must lie in (0, {}], got {}",
                crate::transport::MAX_COURANT,
                s.target_courant
            )));
        }
        if !(s.sponge_rate >= 0.0) {
            return Err(Error::Config("sponge_rate must be non-negative".into()));
        }
        self.velocity.validate()?;
        let g = &self.grid;
        let lo = g.x0 + g.sponge_width;
        let hi = g.x0 + g.length - g.sponge_width;
        if self.source.center.len() != 2 {
            return Err(Error::Config(format!(
                "source center needs 2 coordinates, got {}",
                self.source.center.len()
            )));
        }
        let sx = self.source.center[0];
        if !(lo..=hi).contains(&sx) || !(lo..=hi).contains(&s.plane) {
            return Err(Error::Config(format!(
                "source x = {sx} and sensing plane x = {} must lie outside the sponge [{lo}, {hi}]",
                s.plane
            )));
        }
        if sx >= s.plane {
            return Err(Error::Config(format!(
                "source x = {sx} must be upstream of the sensing plane x = {}",
                s.plane
            )));
        }
        if let Some(b) = self.source.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("beta must be positive, got {b}")));
            }
        }
        match &self.sensors {
            SensorsSection::Stationary { points } => {
                if points.is_empty() || points.iter().any(|p| p.len() != 1) {
                    return Err(Error::Config(
                        "stationary sensors need one cross-stream coordinate each".into(),
                    ));
                }
            }
            SensorsSection::Array { count, threshold } => {
                if *count == 0 || !(*threshold > 0.0 && *threshold < 1.0) {
                    return Err(Error::Config(format!(
                        "array needs count >= 1 and threshold in (0, 1), got {count}, {threshold}"
                    )));
                }
            }
            SensorsSection::Moving => {}
        }
        let o = &self.optimizer;
        if o.r21.is_nan() || o.r21 < 0.0 || !(o.r31 >= 0.0 && o.r31.is_finite()) {
            return Err(Error::Config(format!(
                "r21 must be >= 0 (or inf) and r31 finite >= 0, got {} and {}",
                o.r21, o.r31
            )));
        }
        o.descent
            .to_config(o.cost, o.alphas.unwrap_or(Alphas::MEAN_ONLY))
            .validate()?;
        self.estimation.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[velocity]
kind = "uniform"
centerline_speed = 18.0
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.scenario.horizon, 3.0);
        assert_eq!(c.grid.nx, 128);
        assert_eq!(c.source.intensity, Intensity::Pulse { frequency: 4.0 });
        assert_eq!(
            c.sensors,
            SensorsSection::Stationary {
                points: vec![vec![0.0]]
            }
        );
        assert_eq!(c.optimizer.descent.step_scale, 0.05);
        assert_eq!(c.estimation.max_iterations, 200);
    }

    #[test]
    fn unknown_keys_rejected() {
        for extra in [
            "[scenario]\nbogus = 1\n",
            "[grid]\nnz = 4\n",
            "[optimizer]\nstep = 0.1\n",
            "[sensors]\nkind = \"array\"\nspacing = 0.1\n",
            "colour = 3\n",
        ] {
            let text = format!("{extra}{MINIMAL}");
            assert!(
                matches!(ScenarioConfig::from_toml_str(&text), Err(Error::Config(_))),
                "{extra}"
            );
        }
    }

    #[test]
    fn sensor_downstream_of_source_required() {
        let text = format!("[scenario]\nplane = 1.0\n{MINIMAL}");
        assert!(matches!(
            ScenarioConfig::from_toml_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn roundtrip_through_toml() {
        let text = format!(
            "[optimizer]\ncost = \"J1\"\nr21 = 1.0\ninitial = {{ kind = \"random-walk\", seed = 3 }}\n{MINIMAL}"
        );
        let c = ScenarioConfig::from_toml_str(&text).unwrap();
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn seed_override_reaches_velocity_and_walk() {
        let text =
            format!("[optimizer]\ninitial = {{ kind = \"random-walk\", seed = 3 }}\n{MINIMAL}");
        let c = ScenarioConfig::from_toml_str(&text).unwrap().with_seed(11);
        assert_eq!(c.velocity_spec().seed, 11);
        assert!(matches!(
            c.initial_trajectory(),
            InitialTrajectory::RandomWalk { seed: 11, .. }
        ));
    }
}
