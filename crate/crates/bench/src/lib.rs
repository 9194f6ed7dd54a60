//! Fixtures shared by the benchmarks.

use vortlab_core::{Grid, ScalarField3, VectorField3};

pub fn grid(n: usize) -> Grid {
    Grid::new(4.0, n).expect("odd node count")
}

/// Smooth, rapidly decaying vector field with all components nonzero.
pub fn bump(grid: Grid) -> VectorField3 {
    VectorField3::from_fn(grid, |p| {
        let e = (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 2.0).exp();
        [-p[1] * e, (p[0] - p[2]) * e, p[1] * e]
    })
}

pub fn scalar_bump(grid: Grid) -> ScalarField3 {
    ScalarField3::from_fn(grid, |p| (-(p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]) / 2.0).exp())
}
