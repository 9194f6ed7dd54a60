use rayon::prelude::*;

use super::{Grid, MultiIndex, ScalarField3, VectorField3};
use crate::error::{Error, Result};

/// Finite-difference weights for the `m`-th derivative at `x0` on nodes `xs`
/// (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Second-order stencil for each position along an axis: centered where it
/// fits, otherwise shifted inward with `order + 2` points.
struct AxisStencils {
    start: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl AxisStencils {
    fn new(n: usize, h: f64, order: usize) -> Self {
        let half = (order + 1) / 2;
        let scale = h.powi(order as i32);
        let mut start = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let (s, w) = if i >= half && i + half < n {
                (i - half, 2 * half + 1)
            } else {
                let w = order + 2;
                let s = i.saturating_sub(w / 2).min(n - w);
                (s, w)
            };
            let xs: Vec<f64> = (s..s + w).map(|j| j as f64 - i as f64).collect();
            let wts = fd_weights(0.0, &xs, order)
                .into_iter()
                .map(|c| c / scale)
                .collect();
            start.push(s);
            weights.push(wts);
        }
        Self { start, weights }
    }
}

fn derivative_along(f: &[f64], grid: &Grid, axis: usize, order: usize) -> Vec<f64> {
    if order == 0 {
        return f.to_vec();
    }
    let n = grid.n();
    let st = AxisStencils::new(n, grid.h(), order);
    let stride = [1, n, n * n][axis];
    (0..f.len())
        .into_par_iter()
        .map(|idx| {
            let pos = (idx / stride) % n;
            let base = idx - pos * stride;
            let s = st.start[pos];
            st.weights[pos]
                .iter()
                .enumerate()
                .map(|(o, w)| w * f[base + (s + o) * stride])
                .sum()
        })
        .collect()
}

/// `D^gamma f` with second-order differences, one-sided inside the two-cell
/// boundary layer (see [`Grid::in_boundary_layer`]).
pub fn fd_derivative(f: &ScalarField3, gamma: MultiIndex) -> Result<ScalarField3> {
    if gamma.order() > 4 {
        return Err(Error::DerivativeOrder(gamma.order()));
    }
    let grid = *f.grid();
    let mut vals: Option<Vec<f64>> = None;
    for axis in (0..3).rev() {
        let ord = gamma.0[axis] as usize;
        if ord == 0 {
            continue;
        }
        let src = vals.as_deref().unwrap_or(f.values());
        vals = Some(derivative_along(src, &grid, axis, ord));
    }
    Ok(match vals {
        Some(v) => ScalarField3::from_values(grid, v)?,
        None => f.clone(),
    })
}

/// First derivative along `axis`.
pub fn partial(f: &ScalarField3, axis: usize) -> ScalarField3 {
    let v = derivative_along(f.values(), f.grid(), axis, 1);
    ScalarField3::from_values(*f.grid(), v).expect("same grid")
}

pub fn gradient(f: &ScalarField3) -> VectorField3 {
    VectorField3::new([partial(f, 0), partial(f, 1), partial(f, 2)]).expect("same grid")
}

/// `(v3,2 - v2,3, v1,3 - v3,1, v2,1 - v1,2)`.
pub fn curl(v: &VectorField3) -> VectorField3 {
    let d = |c: usize, a: usize| partial(v.component(c), a);
    VectorField3::new([
        d(2, 1).sub(&d(1, 2)),
        d(0, 2).sub(&d(2, 0)),
        d(1, 0).sub(&d(0, 1)),
    ])
    .expect("same grid")
}

pub fn divergence(v: &VectorField3) -> ScalarField3 {
    let mut out = partial(v.component(0), 0);
    out.axpy(1.0, &partial(v.component(1), 1));
    out.axpy(1.0, &partial(v.component(2), 2));
    out
}
