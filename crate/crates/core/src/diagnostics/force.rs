use std::f64::consts::PI;

use rayon::prelude::*;

use crate::convolution::TimeSlab;
use crate::error::{Error, Result};
use crate::field::{discrete_norm, fd_derivative, partial, MultiIndex, NormKind, NormOptions, ScalarField3, VectorField3};

/// `F_i(t) = -nu sum_j d_j^2 omega_i(t)` on every slice, with
/// `int_0^T ||F(t)||_{L^2}^2 dt` by the trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTerm {
    pub slab: TimeSlab,
    pub l2_time: f64,
}

pub fn force_term(omega: &TimeSlab, nu: f64) -> Result<ForceTerm> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::Parameter {
            name: "nu",
            value: nu,
            reason: "viscosity must be finite and nonnegative",
        });
    }
    let slices = omega
        .slices()
        .par_iter()
        .map(|w| -> Result<VectorField3> {
            let c = w
                .components()
                .iter()
                .map(|wi| -> Result<ScalarField3> {
                    let mut lap = ScalarField3::zeros(*wi.grid());
                    for j in 0..3 {
                        let mut g = [0u8; 3];
                        g[j] = 2;
                        lap.axpy(-nu, &fd_derivative(wi, MultiIndex(g))?);
                    }
                    Ok(lap)
                })
                .collect::<Result<Vec<_>>>()?;
            let [a, b, c]: [ScalarField3; 3] = c.try_into().expect("three components");
            VectorField3::new([a, b, c])
        })
        .collect::<Result<Vec<_>>>()?;
    let slab = TimeSlab::new(omega.t0(), omega.t1(), slices)?;
    let sq = slab
        .slices()
        .iter()
        .map(|f| discrete_norm(f, NormKind::Hm(0), &NormOptions::ALL).map(|v| v * v))
        .collect::<Result<Vec<_>>>()?;
    let dt = slab.dt();
    let last = sq.len() - 1;
    let l2_time = sq
        .iter()
        .enumerate()
        .map(|(m, v)| if m == 0 || m == last { 0.5 * dt * v } else { dt * v })
        .sum();
    Ok(ForceTerm { slab, l2_time })
}

/// Samples of `f(tan y)` on the uniform cell-centred grid of `m^3` points in
/// `(-pi/2, pi/2)^3`, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactField {
    m: usize,
    values: Vec<f64>,
}

impl CompactField {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dy(&self) -> f64 {
        PI / self.m as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        -0.5 * PI + (j as f64 + 0.5) * self.dy()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.m * (j + self.m * k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Trilinear interpolation with coordinates clamped to the box, so the field
/// is continued by its face values.
fn sample_clamped(f: &ScalarField3, p: [f64; 3]) -> f64 {
    let g = f.grid();
    let (lo, hi) = (g.coord(0), g.coord(g.n() - 1));
    f.interpolate(p.map(|x| x.clamp(lo, hi)))
}

pub fn compactify_field(f: &ScalarField3, m: usize) -> CompactField {
    let m = m.max(2);
    let dy = PI / m as f64;
    let x: Vec<f64> = (0..m).map(|j| (-0.5 * PI + (j as f64 + 0.5) * dy).tan()).collect();
    let values = (0..m * m * m)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx % m, (idx / m) % m, idx / (m * m));
            sample_clamped(f, [x[i], x[j], x[k]])
        })
        .collect();
    CompactField { m, values }
}

/// Largest ratio `|d_{y_a} f_c| / ((1 + |x|^2) sum_{|b| <= 1} |D^b_x f|)`
/// over compactified nodes whose difference stencil maps inside the
/// original grid's interior. `d_y` is a central difference on the
/// compactified samples; the right side is interpolated from grid
/// differences.
pub fn compactified_derivative_ratio(f: &ScalarField3, m: usize) -> f64 {
    let c = compactify_field(f, m);
    let g = *f.grid();
    let inner = g.extent() - 3.0 * g.h();
    let d: Vec<ScalarField3> = (0..3).map(|a| partial(f, a)).collect();
    let m = c.m();
    let x = |j: usize| c.y(j).tan();
    let floor = 1e-10 * f.max_abs().max(d.iter().map(|di| di.max_abs()).fold(0.0, f64::max));
    (1..m - 1)
        .into_par_iter()
        .map(|k| {
            let mut worst: f64 = 0.0;
            for j in 1..m - 1 {
                for i in 1..m - 1 {
                    let idx = [i, j, k];
                    if idx.iter().any(|&a| x(a - 1).abs() > inner || x(a + 1).abs() > inner) {
                        continue;
                    }
                    let p = idx.map(x);
                    let r2 = p.iter().map(|v| v * v).sum::<f64>();
                    let rhs = (1.0 + r2)
                        * (f.interpolate(p).abs() + d.iter().map(|di| di.interpolate(p).abs()).sum::<f64>());
                    if rhs <= floor {
                        continue;
                    }
                    for a in 0..3 {
                        let (mut up, mut dn) = (idx, idx);
                        up[a] += 1;
                        dn[a] -= 1;
                        let dyf = (c.at(up[0], up[1], up[2]) - c.at(dn[0], dn[1], dn[2])) / (2.0 * c.dy());
                        worst = worst.max(dyf.abs() / rhs);
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn gauss(g: Grid, s2: f64) -> ScalarField3 {
        ScalarField3::from_fn(g, |p| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (2.0 * s2)).exp())
    }

    #[test]
    fn harmonic_vorticity_has_no_force() {
        let g = Grid::new(2.0, 17).unwrap();
        let w = VectorField3::from_fn(g, |p| [p[0] * p[0] - p[1] * p[1], p[0] * p[1] * p[2], 3.0 * p[2] - 1.0]);
        let f = force_term(&TimeSlab::constant(&w, 0.0, 1.0, 3).unwrap(), 0.3).unwrap();
        assert!(f.slab.slices().iter().all(|s| s.max_abs() < 1e-9));
        assert!(f.l2_time < 1e-15);
    }

    #[test]
    fn zero_viscosity_gives_zero_force() {
        let g = Grid::new(2.0, 13).unwrap();
        let w = VectorField3::from_fn(g, |p| [p[0].sin(), p[1] * p[1], (-p[2] * p[2]).exp()]);
        let f = force_term(&TimeSlab::constant(&w, 0.0, 1.0, 2).unwrap(), 0.0).unwrap();
        assert!(f.slab.slices().iter().all(|s| s.max_abs() == 0.0));
        assert!(force_term(&TimeSlab::constant(&w, 0.0, 1.0, 2).unwrap(), -1.0).is_err());
    }

    #[test]
    fn heat_kernel_force_matches_time_derivative() {
        // G(t) with variance s2 = 2 nut t: Laplacian = d_t G / nut.
        let (nut, t, nu) = (0.5, 0.5, 0.2);
        let mut errs = Vec::new();
        for n in [33, 65] {
            let g = Grid::new(3.0, n).unwrap();
            let s2 = 2.0 * nut * t;
            let w = VectorField3::new([gauss(g, s2), ScalarField3::zeros(g), ScalarField3::zeros(g)]).unwrap();
            let f = force_term(&TimeSlab::constant(&w, 0.0, 1.0, 2).unwrap(), nu).unwrap();
            let exact = ScalarField3::from_fn(g, |p| {
                let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                -nu * (r2 / (s2 * s2) - 3.0 / s2) * (-r2 / (2.0 * s2)).exp()
            });
            let d = f.slab.slice(0).component(0).sub(&exact);
            errs.push(discrete_norm(&d, NormKind::Cm(0), &NormOptions::interior()).unwrap() / exact.max_abs());
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(errs[1] < 1e-2 && (rate - 2.0).abs() < 0.3, "{errs:?} {rate}");
    }

    #[test]
    fn force_is_linear_in_nu_and_omega() {
        let g = Grid::new(2.0, 13).unwrap();
        let a = VectorField3::from_fn(g, |p| [p[0].sin(), p[1] * p[2], (-p[2] * p[2]).exp()]);
        let b = VectorField3::from_fn(g, |p| [p[1].cos(), p[0].powi(3), p[0] * p[2]]);
        let slab = |w: &VectorField3| TimeSlab::constant(w, 0.0, 1.0, 2).unwrap();
        let ab = a.scaled(2.0).add(&b.scaled(-0.5));
        let lhs = force_term(&slab(&ab), 0.3).unwrap().slab;
        let fa = force_term(&slab(&a), 0.6).unwrap().slab;
        let fb = force_term(&slab(&b), 0.3).unwrap().slab;
        let rhs = fa.slice(0).add(&fb.slice(0).scaled(-0.5));
        assert!(lhs.slice(0).sub(&rhs).max_abs() <= 1e-12 * rhs.max_abs());
    }

    #[test]
    fn compactified_constant_and_sup() {
        let g = Grid::new(4.0, 33).unwrap();
        let one = compactify_field(&ScalarField3::from_fn(g, |_| 1.0), 21);
        assert!(one.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let f = ScalarField3::from_fn(g, |p| 1.0 / (1.0 + (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).powi(4)));
        let c = compactify_field(&f, 21);
        assert!((c.max_abs() - f.max_abs()).abs() < 1e-9, "{} {}", c.max_abs(), f.max_abs());
    }

    #[test]
    fn compactified_derivatives_obey_the_weighted_bound() {
        let g = Grid::new(4.0, 33).unwrap();
        let f = ScalarField3::from_fn(g, |p| (p[0] - 0.3 * p[1]).sin() * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 2.0).exp());
        let r = compactified_derivative_ratio(&f, 41);
        assert!(r > 0.1 && r <= 2.0, "{r}");
    }
}
