use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{load_series, ProviderKind, VelocityProviderSpec, VelocitySeries};
use crate::domain::{central_derivative, BoundaryKind, Grid, STREAMWISE};
use crate::error::{Error, Result};
use crate::time::TimeAxis;

const MAX_STREAMWISE_MODE: u32 = 4;
const MAX_CROSS_MODE: u32 = 3;

/// Build a velocity series on `grid` sampled at every instant of `time`.
pub fn synthesize_velocity(
    spec: &VelocityProviderSpec,
    grid: &Arc<Grid>,
    time: &TimeAxis,
) -> Result<VelocitySeries> {
    spec.validate()?;
    let n = grid.len();
    let ndim = grid.ndim();
    match spec.kind {
        ProviderKind::Uniform => {
            let mut snap = vec![0.0; ndim * n];
            snap[..n].fill(spec.centerline_speed);
            VelocitySeries::new(Arc::clone(grid), time.dt(), vec![snap; time.len()])
        }
        ProviderKind::ParabolicChannel => {
            let wall = grid.wall_axis().ok_or_else(|| {
                Error::Config("parabolic-channel flow needs a wall-bounded axis".into())
            })?;
            let mut snap = vec![0.0; ndim * n];
            for (idx, u) in snap[..n].iter_mut().enumerate() {
                let eta = wall_coordinate(grid, wall, grid.unravel(idx)[wall]);
                *u = spec.centerline_speed * (1.0 - eta * eta);
            }
            VelocitySeries::new(Arc::clone(grid), time.dt(), vec![snap; time.len()])
        }
        ProviderKind::FrozenFourier => frozen_fourier(spec, grid, time),
        ProviderKind::StoredSeries => {
            let path = spec.path.as_ref().expect("validated");
            let series = load_series(path, grid)?;
            if series.last_time() < time.horizon() * (1.0 - 1e-9) {
                return Err(Error::Coverage {
                    time: time.horizon(),
                    last: series.last_time(),
                });
            }
            Ok(series)
        }
    }
}

/// Wall-normal coordinate mapped to `[-1, 1]`.
fn wall_coordinate(grid: &Grid, axis: usize, i: usize) -> f64 {
    2.0 * i as f64 / (grid.dims()[axis] - 1) as f64 - 1.0
}

/// Mean streamwise profile `u_c (1 - eta^2)^(1/7)` across the first wall
/// axis, or a uniform `u_c` when there is none.
pub fn mean_profile(grid: &Grid, centerline: f64) -> Vec<f64> {
    match grid.wall_axis() {
        None => vec![centerline; grid.len()],
        Some(w) => (0..grid.len())
            .map(|idx| {
                let eta = wall_coordinate(grid, w, grid.unravel(idx)[w]);
                centerline * (1.0 - eta * eta).max(0.0).powf(1.0 / 7.0)
            })
            .collect(),
    }
}

struct Mode {
    amp: f64,
    wavenumber: f64,
    phase: f64,
    // Per transverse axis: (wavenumber factor, phase).
    transverse: Vec<(f64, f64)>,
}

fn frozen_fourier(
    spec: &VelocityProviderSpec,
    grid: &Arc<Grid>,
    time: &TimeAxis,
) -> Result<VelocitySeries> {
    let ndim = grid.ndim();
    if ndim < 2 {
        return Err(Error::Config(
            "frozen-fourier flow needs at least two axes".into(),
        ));
    }
    if grid.boundary()[STREAMWISE] != BoundaryKind::Periodic {
        return Err(Error::Config(
            "frozen-fourier flow needs a periodic streamwise axis".into(),
        ));
    }
    let n = grid.len();
    let mean = mean_profile(grid, spec.centerline_speed);
    let convect = spec.mean_speed.unwrap_or_else(|| {
        grid.weights()
            .iter()
            .zip(&mean)
            .map(|(w, u)| w * u)
            .sum::<f64>()
            / grid.volume()
    });

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lx = grid.extent()[STREAMWISE];
    let modes: Vec<Mode> = (0..spec.modes)
        .map(|_| {
            let j = rng.gen_range(1..=MAX_STREAMWISE_MODE) as f64;
            let amp = rng.gen_range(0.5..1.0);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let transverse = (1..ndim)
                .map(|_| {
                    let m = rng.gen_range(1..=MAX_CROSS_MODE) as f64;
                    (m, rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            Mode {
                amp,
                wavenumber: 2.0 * PI * j / lx,
                phase,
                transverse,
            }
        })
        .collect();

    // Transverse shape of every mode, including the wall envelope.
    let shapes: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| {
            (0..n)
                .map(|idx| {
                    let mi = grid.unravel(idx);
                    let mut s = 1.0;
                    for a in 1..ndim {
                        let (k, ph) = m.transverse[a - 1];
                        s *= match grid.boundary()[a] {
                            BoundaryKind::Wall => {
                                let eta = wall_coordinate(grid, a, mi[a]);
                                let env = 1.0 - eta * eta;
                                env * env * (0.5 * PI * k * eta + ph).cos()
                            }
                            BoundaryKind::Periodic => {
                                let x = grid.coord(a, mi[a]) - grid.origin()[a];
                                (2.0 * PI * k * x / grid.extent()[a] + ph).cos()
                            }
                        };
                    }
                    m.amp * s
                })
                .collect()
        })
        .collect();

    let nx = grid.dims()[STREAMWISE];
    let xs = grid.axis_coords(STREAMWISE);
    let sx = grid.strides()[STREAMWISE];
    let streamfunction = |t: f64| -> Vec<f64> {
        let mut psi = vec![0.0; n];
        for (m, shape) in modes.iter().zip(&shapes) {
            let wave: Vec<f64> = xs
                .iter()
                .map(|x| (m.wavenumber * (x - convect * t) + m.phase).sin())
                .collect();
            for i in 0..nx {
                let w = wave[i];
                let row = i * sx;
                for k in row..row + sx {
                    psi[k] += w * shape[k];
                }
            }
        }
        psi
    };

    // u_0 = D_1 psi, u_1 = -D_0 psi: the discrete divergence cancels
    // because difference operators on different axes commute.
    let curl = |psi: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (
            central_derivative(grid, psi, 1),
            central_derivative(grid, psi, 0),
        )
    };

    let scale = if spec.amplitude > 0.0 && !modes.is_empty() {
        let (_, dx) = curl(&streamfunction(0.0));
        let rms = (grid
            .weights()
            .iter()
            .zip(&dx)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            / grid.volume())
        .sqrt();
        if rms > 0.0 {
            spec.amplitude / rms
        } else {
            0.0
        }
    } else {
        0.0
    };

    let snapshots = (0..time.len())
        .map(|k| {
            let mut snap = vec![0.0; ndim * n];
            snap[..n].copy_from_slice(&mean);
            if scale != 0.0 {
                let (dy, dx) = curl(&streamfunction(time.time(k)));
                for i in 0..n {
                    snap[i] += scale * dy[i];
                    snap[n + i] = -scale * dx[i];
                }
            }
            snap
        })
        .collect();
    VelocitySeries::new(Arc::clone(grid), time.dt(), snapshots)
}
