//! Sensor paths sampled on the solver time axis.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{BoundaryKind, Grid, STREAMWISE};
use crate::error::{Error, Result};
use crate::time::TimeAxis;

/// Sensor positions at every solver step. The streamwise coordinate is fixed
/// to the sensing plane; the remaining axes are movable.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorTrajectory {
    time: TimeAxis,
    points: Vec<Vec<f64>>,
}

impl SensorTrajectory {
    pub fn new(time: TimeAxis, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != time.len() {
            return Err(Error::Shape(format!(
                "trajectory has {} samples, time axis has {}",
                points.len(),
                time.len()
            )));
        }
        let ndim = points[0].len();
        if points.iter().any(|p| p.len() != ndim) {
            return Err(Error::Shape("trajectory points differ in dimension".into()));
        }
        Ok(Self { time, points })
    }

    pub fn stationary(time: TimeAxis, point: Vec<f64>) -> Self {
        Self {
            points: vec![point; time.len()],
            time,
        }
    }

    pub fn time(&self) -> &TimeAxis {
        &self.time
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.points[0].len()
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.points[n]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.points
    }

    pub fn plane(&self) -> f64 {
        self.points[0][STREAMWISE]
    }

    /// Movable (cross-stream) axes.
    pub fn movable_axes(&self) -> std::ops::Range<usize> {
        1..self.ndim()
    }

    /// Coordinate `axis` over time.
    pub fn axis_trace(&self, axis: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[axis]).collect()
    }

    /// `dx/dt` by central differences, one-sided at the ends.
    pub fn velocity(&self, axis: usize) -> Vec<f64> {
        let x = self.axis_trace(axis);
        let dt = self.time.dt();
        let n = x.len();
        if n < 2 {
            return vec![0.0; n];
        }
        (0..n)
            .map(|i| {
                if i == 0 {
                    (x[1] - x[0]) / dt
                } else if i == n - 1 {
                    (x[n - 1] - x[n - 2]) / dt
                } else {
                    (x[i + 1] - x[i - 1]) / (2.0 * dt)
                }
            })
            .collect()
    }

    /// `d2x/dt2` by second differences, one-sided at the ends.
    pub fn acceleration(&self, axis: usize) -> Vec<f64> {
        let x = self.axis_trace(axis);
        let dt2 = self.time.dt() * self.time.dt();
        let n = x.len();
        if n < 3 {
            return vec![0.0; n];
        }
        (0..n)
            .map(|i| {
                let j = i.clamp(1, n - 2);
                (x[j - 1] - 2.0 * x[j] + x[j + 1]) / dt2
            })
            .collect()
    }

    /// Time mean of the sensor speed `|dx/dt|` over the movable axes.
    pub fn mean_speed(&self) -> f64 {
        let vel: Vec<Vec<f64>> = self.movable_axes().map(|a| self.velocity(a)).collect();
        let speed: Vec<f64> = (0..self.len())
            .map(|n| vel.iter().map(|v| v[n] * v[n]).sum::<f64>().sqrt())
            .collect();
        self.time.mean(&speed)
    }

    /// Largest per-step, per-axis displacement between two trajectories.
    pub fn max_displacement(&self, other: &SensorTrajectory) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Check every point lies inside the grid.
    pub fn check_inside(&self, grid: &Grid) -> Result<()> {
        for (n, p) in self.points.iter().enumerate() {
            grid.wrap_point(p).map_err(|e| match e {
                Error::Placement(msg) => Error::Placement(format!(
                    "sensor leaves the domain at t = {}: {msg}",
                    self.time.time(n)
                )),
                other => other,
            })?;
        }
        Ok(())
    }
}

fn default_radius() -> f64 {
    0.2
}

fn default_revolutions() -> f64 {
    1.0
}

fn default_walk_step() -> f64 {
    0.01
}

fn default_walk_bound() -> f64 {
    0.3
}

/// Starting trajectory for the optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialTrajectory {
    /// Circle of `radius` around the channel centre. In 2D only the first
    /// movable coordinate exists, so the path is `y = r sin(2 pi n t / T)`.
    Circular {
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_revolutions")]
        revolutions: f64,
    },
    /// Uniform steps in `[-step, step]` per movable axis, reflected at
    /// `bound` from the centre.
    RandomWalk {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_walk_step")]
        step: f64,
        #[serde(default = "default_walk_bound")]
        bound: f64,
    },
    /// Fixed cross-stream position (movable coordinates only).
    Stationary { point: Vec<f64> },
}

fn channel_centre(grid: &Grid, axis: usize) -> f64 {
    grid.origin()[axis] + 0.5 * grid.extent()[axis]
}

fn half_extent(grid: &Grid, axis: usize) -> f64 {
    0.5 * grid.extent()[axis]
}

/// Generate a starting trajectory in the sensing plane `plane`.
pub fn make_initial_trajectory(
    kind: &InitialTrajectory,
    grid: &Grid,
    time: &TimeAxis,
    plane: f64,
) -> Result<SensorTrajectory> {
    let ndim = grid.ndim();
    let centre: Vec<f64> = (0..ndim)
        .map(|a| {
            if a == STREAMWISE {
                plane
            } else {
                channel_centre(grid, a)
            }
        })
        .collect();
    let min_half = (1..ndim)
        .map(|a| half_extent(grid, a))
        .fold(f64::INFINITY, f64::min);
    let points: Vec<Vec<f64>> = match kind {
        InitialTrajectory::Circular {
            radius,
            revolutions,
        } => {
            if !(*radius >= 0.0) || *radius > min_half {
                return Err(Error::Config(format!(
                    "circular radius {radius} exceeds half the cross-stream extent {min_half}"
                )));
            }
            let omega = 2.0 * PI * revolutions / time.horizon();
            (0..time.len())
                .map(|n| {
                    let phase = omega * time.time(n);
                    let mut p = centre.clone();
                    if ndim == 2 {
                        p[1] += radius * phase.sin();
                    } else if ndim >= 3 {
                        p[1] += radius * phase.cos();
                        p[2] += radius * phase.sin();
                    }
                    p
                })
                .collect()
        }
        InitialTrajectory::RandomWalk { seed, step, bound } => {
            if !(*bound >= 0.0) || *bound > min_half || !(*step >= 0.0) {
                return Err(Error::Config(format!(
                    "random walk bound {bound} must lie within half the cross-stream extent {min_half}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut p = centre.clone();
            let mut out = Vec::with_capacity(time.len());
            out.push(p.clone());
            for _ in 0..time.steps() {
                for a in 1..ndim {
                    let d: f64 = if *step > 0.0 {
                        rng.gen_range(-step..=*step)
                    } else {
                        0.0
                    };
                    let mut off = p[a] - centre[a] + d;
                    if off > *bound {
                        off = 2.0 * bound - off;
                    } else if off < -bound {
                        off = -2.0 * bound - off;
                    }
                    p[a] = centre[a] + off;
                }
                out.push(p.clone());
            }
            out
        }
        InitialTrajectory::Stationary { point } => {
            if point.len() != ndim - 1 {
                return Err(Error::Config(format!(
                    "stationary point needs {} cross-stream coordinates, got {}",
                    ndim - 1,
                    point.len()
                )));
            }
            let mut p = centre.clone();
            p[1..].copy_from_slice(point);
            vec![p; time.len()]
        }
    };
    let traj = SensorTrajectory::new(*time, points)?;
    traj.check_inside(grid).map_err(|e| match e {
        Error::Placement(m) => Error::Config(m),
        other => other,
    })?;
    Ok(traj)
}

/// Keep movable coordinates at least `margin` away from walls. Returns the
/// number of coordinates that were moved.
pub fn clamp_to_walls(traj: &mut SensorTrajectory, grid: &Grid, margin: f64) -> usize {
    let mut moved = 0;
    let axes = traj.movable_axes();
    for p in traj.points_mut() {
        for a in axes.clone() {
            if grid.boundary()[a] != BoundaryKind::Wall {
                continue;
            }
            let lo = grid.origin()[a] + margin;
            let hi = grid.origin()[a] + grid.extent()[a] - margin;
            let c = p[a].clamp(lo, hi);
            if c != p[a] {
                p[a] = c;
                moved += 1;
            }
        }
    }
    moved
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridConfig;

    fn grid() -> Grid {
        Grid::new(&GridConfig::channel_2d(32, 21, 5.0 * PI, -0.6, 1.2)).unwrap()
    }

    #[test]
    fn circular_radius_bounds_excursion() {
        let ax = TimeAxis::from_steps(3.0, 400);
        let t = make_initial_trajectory(
            &InitialTrajectory::Circular {
                radius: 0.2,
                revolutions: 1.0,
            },
            &grid(),
            &ax,
            13.1,
        )
        .unwrap();
        let max = t.axis_trace(1).iter().fold(0.0f64, |m, y| m.max(y.abs()));
        assert!((max - 0.2).abs() < 1e-4);
        assert!(t.axis_trace(0).iter().all(|&x| x == 13.1));
    }

    #[test]
    fn oversized_radius_rejected() {
        let ax = TimeAxis::from_steps(3.0, 10);
        assert!(matches!(
            make_initial_trajectory(
                &InitialTrajectory::Circular {
                    radius: 1.5,
                    revolutions: 1.0
                },
                &grid(),
                &ax,
                13.1
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn random_walk_is_seeded_and_bounded() {
        let ax = TimeAxis::from_steps(3.0, 1000);
        let kind = InitialTrajectory::RandomWalk {
            seed: 3,
            step: 0.05,
            bound: 0.3,
        };
        let a = make_initial_trajectory(&kind, &grid(), &ax, 13.1).unwrap();
        let b = make_initial_trajectory(&kind, &grid(), &ax, 13.1).unwrap();
        assert_eq!(a, b);
        assert!(a.axis_trace(1).iter().all(|y| y.abs() <= 0.3 + 1e-12));
    }

    #[test]
    fn stationary_has_zero_velocity() {
        let ax = TimeAxis::from_steps(3.0, 30);
        let t = make_initial_trajectory(
            &InitialTrajectory::Stationary { point: vec![0.0] },
            &grid(),
            &ax,
            13.1,
        )
        .unwrap();
        assert!(t.velocity(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_path_has_exact_second_difference() {
        let ax = TimeAxis::from_steps(1.0, 20);
        let pts = ax.times().iter().map(|t| vec![0.0, t * t]).collect();
        let tr = SensorTrajectory::new(ax, pts).unwrap();
        assert!(tr.acceleration(1).iter().all(|a| (a - 2.0).abs() < 1e-9));
    }
}
