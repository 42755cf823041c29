use std::sync::Arc;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Nodal values on a grid. Stores concentration, adjoint concentration or the
/// adjoint-of-adjoint field alike.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Instability(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Evaluate `f` at every node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node_point(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Quadrature-weighted integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &ScalarField, beta: f64) -> Result<ScalarField> {
        same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(ScalarField {
            grid: Arc::clone(&self.grid),
            values,
        })
    }
}

fn same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if Arc::ptr_eq(&a.grid, &b.grid) || a.grid == b.grid {
        Ok(())
    } else {
        Err(Error::Shape("fields live on different grids".into()))
    }
}

/// Discrete spatial inner product `sum_i w_i a_i b_i` with the grid's
/// quadrature weights.
pub fn inner_product(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    same_grid(a, b)?;
    Ok(weighted_dot(a.grid.weights(), &a.values, &b.values))
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::grid::GridConfig;
    use proptest::prelude::*;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::new(&GridConfig::channel_2d(10, 7, 5.0, 0.0, 0.0)).unwrap())
    }

    #[test]
    fn constant_one_gives_volume() {
        let g = grid();
        let one = ScalarField::from_fn(Arc::clone(&g), |_| 1.0);
        let v = inner_product(&one, &one).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let g = grid();
        let a = ScalarField::from_fn(Arc::clone(&g), |p| if p[0] < 2.0 { 1.0 } else { 0.0 });
        let b = ScalarField::from_fn(Arc::clone(&g), |p| if p[0] >= 2.0 { 3.0 } else { 0.0 });
        assert_eq!(inner_product(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_shape_error() {
        let a = ScalarField::zeros(grid());
        let other = Arc::new(Grid::new(&GridConfig::channel_2d(12, 7, 5.0, 0.0, 0.0)).unwrap());
        let b = ScalarField::zeros(other);
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = grid();
        let mut v = vec![0.0; g.len()];
        v[3] = f64::NAN;
        assert!(ScalarField::from_values(g, v).is_err());
    }

    proptest! {
        #[test]
        fn inner_product_symmetric_bilinear_psd(
            a in proptest::collection::vec(-1.0f64..1.0, 70),
            b in proptest::collection::vec(-1.0f64..1.0, 70),
            c in proptest::collection::vec(-1.0f64..1.0, 70),
            s in -3.0f64..3.0,
        ) {
            let g = grid();
            let fa = ScalarField::from_values(Arc::clone(&g), a).unwrap();
            let fb = ScalarField::from_values(Arc::clone(&g), b).unwrap();
            let fc = ScalarField::from_values(Arc::clone(&g), c).unwrap();
            let ab = inner_product(&fa, &fb).unwrap();
            let ba = inner_product(&fb, &fa).unwrap();
            prop_assert!((ab - ba).abs() < 1e-14);
            let lhs = inner_product(&fa.combine(s, &fc, 1.0).unwrap(), &fb).unwrap();
            let rhs = s * ab + inner_product(&fc, &fb).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert!(inner_product(&fa, &fa).unwrap() >= 0.0);
        }
    }
}
