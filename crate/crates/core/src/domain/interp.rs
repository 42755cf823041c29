use super::field::ScalarField;
use super::grid::{BoundaryKind, Grid};
use crate::error::Result;

/// Multilinear interpolation of nodal values at an arbitrary point.
pub fn sample_field(field: &ScalarField, point: &[f64]) -> Result<f64> {
    sample_values(field.grid(), field.values(), point)
}

pub(crate) fn sample_values(grid: &Grid, values: &[f64], point: &[f64]) -> Result<f64> {
    let p = grid.wrap_point(point)?;
    let ndim = grid.ndim();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..ndim {
        let n = grid.dims()[a];
        let s = (p[a] - grid.origin()[a]) / grid.spacing()[a];
        match grid.boundary()[a] {
            BoundaryKind::Periodic => {
                let i0 = (s.floor() as i64).rem_euclid(n as i64) as usize;
                lo[a] = i0;
                hi[a] = (i0 + 1) % n;
                frac[a] = s - s.floor();
            }
            BoundaryKind::Wall => {
                let i0 = (s.floor().max(0.0) as usize).min(n - 2);
                lo[a] = i0;
                hi[a] = i0 + 1;
                frac[a] = (s - i0 as f64).clamp(0.0, 1.0);
            }
        }
    }
    let strides = grid.strides();
    let mut acc = 0.0;
    for corner in 0..(1usize << ndim) {
        let mut w = 1.0;
        let mut idx = 0;
        for a in 0..ndim {
            if corner >> a & 1 == 1 {
                w *= frac[a];
                idx += hi[a] * strides[a];
            } else {
                w *= 1.0 - frac[a];
                idx += lo[a] * strides[a];
            }
        }
        if w != 0.0 {
            acc += w * values[idx];
        }
    }
    Ok(acc)
}

/// Central-difference derivative along `axis`; one-sided at walls.
pub fn central_derivative(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let n = grid.dims()[axis];
    let h = grid.spacing()[axis];
    let stride = grid.strides()[axis];
    let outer = grid.len() / (n * stride);
    let periodic = grid.boundary()[axis] == BoundaryKind::Periodic;
    for o in 0..outer {
        let base = o * n * stride;
        for i in 0..n {
            let (im, ip, scale) = if periodic {
                ((i + n - 1) % n, (i + 1) % n, 0.5 / h)
            } else if i == 0 {
                (0, 1, 1.0 / h)
            } else if i == n - 1 {
                (n - 2, n - 1, 1.0 / h)
            } else {
                (i - 1, i + 1, 0.5 / h)
            };
            let row = base + i * stride;
            let rm = base + im * stride;
            let rp = base + ip * stride;
            for k in 0..stride {
                out[row + k] = (values[rp + k] - values[rm + k]) * scale;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::grid::GridConfig;
    use crate::error::Error;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::new(&GridConfig::channel_2d(16, 9, 4.0, 0.0, 0.0)).unwrap())
    }

    #[test]
    fn exact_at_nodes() {
        let g = grid();
        let f = ScalarField::from_fn(Arc::clone(&g), |p| (p[0] * 1.7).sin() * p[1]);
        for idx in [0, 5, 37, 100, g.len() - 1] {
            let p = g.node_point(idx);
            let v = sample_field(&f, &p).unwrap();
            assert!((v - f.values()[idx]).abs() < 1e-14);
        }
    }

    #[test]
    fn reproduces_linear_fields() {
        // Periodic axis breaks linearity across the seam, so stay inside it.
        let g = grid();
        let f = ScalarField::from_fn(Arc::clone(&g), |p| 2.0 * p[0] + 3.0 * p[1]);
        for p in [[0.1, -0.93], [1.77, 0.2], [3.6, 0.999], [2.5, -1.0]] {
            let v = sample_field(&f, &p).unwrap();
            assert!((v - (2.0 * p[0] + 3.0 * p[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_wall_extent_is_placement_error() {
        let g = grid();
        let f = ScalarField::zeros(Arc::clone(&g));
        assert!(matches!(
            sample_field(&f, &[1.0, 1.5]),
            Err(Error::Placement(_))
        ));
    }

    #[test]
    fn central_derivative_of_linear_field() {
        let g = grid();
        let f = ScalarField::from_fn(Arc::clone(&g), |p| 3.0 * p[1] + 1.0);
        let d = central_derivative(&g, f.values(), 1);
        assert!(d.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn sampling_is_linear_in_field(
            a in proptest::collection::vec(-1.0f64..1.0, 144),
            b in proptest::collection::vec(-1.0f64..1.0, 144),
            s in -2.0f64..2.0,
            t in -2.0f64..2.0,
            x in 0.0f64..4.0,
            y in -1.0f64..1.0,
        ) {
            let g = grid();
            let fa = ScalarField::from_values(Arc::clone(&g), a).unwrap();
            let fb = ScalarField::from_values(Arc::clone(&g), b).unwrap();
            let mix = fa.combine(s, &fb, t).unwrap();
            let lhs = sample_field(&mix, &[x, y]).unwrap();
            let rhs = s * sample_field(&fa, &[x, y]).unwrap() + t * sample_field(&fb, &[x, y]).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-13);
        }
    }
}
