//! Truncated 3-D grids, sampled fields, finite differences and grid norms.

mod fd;
mod grid;
mod norm;
pub mod snapshot;

use rayon::prelude::*;

pub use fd::{curl, divergence, fd_derivative, fd_weights, gradient, partial};
pub use grid::Grid;
pub use norm::{discrete_norm, multi_indices_up_to, NormKind, NormOptions};

use crate::error::{Error, Result};

/// Derivative multi-index `(g1, g2, g3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(pub [u8; 3]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0, 0, 0]);

    pub fn new(a: u8, b: u8, c: u8) -> Self {
        Self([a, b, c])
    }

    /// Unit index along `axis` (0-based).
    pub fn unit(axis: usize) -> Self {
        let mut g = [0u8; 3];
        g[axis] = 1;
        Self(g)
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// The single axis of a first-order index.
    pub fn axis(&self) -> Option<usize> {
        if self.order() == 1 {
            self.0.iter().position(|&a| a == 1)
        } else {
            None
        }
    }
}

/// Real values sampled at every node of a [`Grid`], x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3 {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField3 {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f` at every node.
    pub fn from_fn<F: Fn([f64; 3]) -> f64 + Sync>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.point(i)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
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

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField3) {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(s, o)| *s += a * o);
    }

    pub fn sub(&self, other: &ScalarField3) -> ScalarField3 {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &ScalarField3) -> ScalarField3 {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField3) -> ScalarField3 {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        ScalarField3 {
            grid: self.grid,
            values,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, j, k)]
    }

    /// Trilinear interpolation at an arbitrary point; zero outside the grid.
    pub fn interpolate(&self, p: [f64; 3]) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = (p[a] - g.coord(0)) / g.h();
            if !(s >= 0.0) || s > (n - 1) as f64 {
                return 0.0;
            }
            let j = (s.floor() as usize).min(n - 2);
            base[a] = j;
            frac[a] = s - j as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut ijk = base;
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    ijk[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.at(ijk[0], ijk[1], ijk[2]);
            }
        }
        acc
    }
}

/// Three scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3 {
    components: [ScalarField3; 3],
}

impl VectorField3 {
    pub fn new(components: [ScalarField3; 3]) -> Result<Self> {
        let g = components[0].grid;
        if components.iter().any(|c| c.grid != g) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: [
                ScalarField3::zeros(grid),
                ScalarField3::zeros(grid),
                ScalarField3::zeros(grid),
            ],
        }
    }

    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 3] + Sync>(grid: Grid, f: F) -> Self {
        let samples: Vec<[f64; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.point(i)))
            .collect();
        let comp = |c: usize| ScalarField3 {
            grid,
            values: samples.iter().map(|s| s[c]).collect(),
        };
        Self {
            components: [comp(0), comp(1), comp(2)],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.components[0].grid
    }

    pub fn component(&self, c: usize) -> &ScalarField3 {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut ScalarField3 {
        &mut self.components[c]
    }

    pub fn components(&self) -> &[ScalarField3; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField3; 3] {
        self.components
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField3) {
        for c in 0..3 {
            self.components[c].axpy(a, &other.components[c]);
        }
    }

    pub fn sub(&self, other: &VectorField3) -> VectorField3 {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &VectorField3) -> VectorField3 {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn scaled(&self, s: f64) -> VectorField3 {
        Self {
            components: self.components.clone().map(|c| c.scaled(s)),
        }
    }

    pub fn map_components<F: Fn(&ScalarField3) -> ScalarField3>(&self, f: F) -> VectorField3 {
        Self {
            components: [
                f(&self.components[0]),
                f(&self.components[1]),
                f(&self.components[2]),
            ],
        }
    }
}

/// Either kind of sampled field; lets norms and snapshots treat both uniformly.
pub trait GridField {
    fn grid(&self) -> &Grid;
    fn scalar_components(&self) -> Vec<&ScalarField3>;
}

impl GridField for ScalarField3 {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn scalar_components(&self) -> Vec<&ScalarField3> {
        vec![self]
    }
}

impl GridField for VectorField3 {
    fn grid(&self) -> &Grid {
        VectorField3::grid(self)
    }
    fn scalar_components(&self) -> Vec<&ScalarField3> {
        self.components.iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_trilinear_functions() {
        let g = Grid::new(2.0, 9).unwrap();
        let f = ScalarField3::from_fn(g, |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2] + p[0] * p[1]);
        let q = [0.31, -0.77, 1.2];
        let exact = 1.0 + 2.0 * q[0] - q[1] + 0.5 * q[2] + q[0] * q[1];
        assert!((f.interpolate(q) - exact).abs() < 1e-12);
        assert_eq!(f.interpolate([5.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn vector_components_must_share_grid() {
        let a = ScalarField3::zeros(Grid::new(2.0, 9).unwrap());
        let b = ScalarField3::zeros(Grid::new(2.0, 11).unwrap());
        assert_eq!(
            VectorField3::new([a.clone(), a, b]),
            Err(Error::GridMismatch)
        );
    }
}
