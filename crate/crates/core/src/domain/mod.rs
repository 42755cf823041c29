//! Grids, nodal fields, mollified deltas and quadrature.

pub mod field;
pub mod grid;
pub mod interp;
pub mod mollifier;
pub mod snapshot;

pub use field::{inner_product, ScalarField};
pub use grid::{make_grid, BoundaryKind, Grid, GridConfig, STREAMWISE};
pub use interp::{central_derivative, sample_field};
pub use mollifier::{gaussian_bump, MollifiedDelta, Stencil};
pub use snapshot::{read_snapshot, write_snapshot};
