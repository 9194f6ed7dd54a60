use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::field::partial;
use crate::field::{Grid, ScalarField3, VectorField3};
use crate::kernels::newtonian_gradient;

/// In-place 3-D FFT on a cube of side `m`, x fastest.
struct Fft3 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.m;
        let plan = if inverse { &self.inv } else { &self.fwd };
        data.par_chunks_mut(m).for_each(|row| plan.process(row));
        for stride in [m, m * m] {
            let lines: Vec<Vec<Complex64>> = (0..m * m)
                .into_par_iter()
                .map(|l| {
                    let base = if stride == m { (l / m) * m * m + l % m } else { l };
                    let mut line: Vec<Complex64> = (0..m).map(|j| data[base + j * stride]).collect();
                    plan.process(&mut line);
                    line
                })
                .collect();
            for (l, line) in lines.into_iter().enumerate() {
                let base = if stride == m { (l / m) * m * m + l % m } else { l };
                for (j, v) in line.into_iter().enumerate() {
                    data[base + j * stride] = v;
                }
            }
        }
        if inverse {
            let s = 1.0 / (m * m * m) as f64;
            data.par_iter_mut().for_each(|v| *v *= s);
        }
    }
}

fn embed(f: &ScalarField3, m: usize) -> Vec<Complex64> {
    let n = f.grid().n();
    let mut out = vec![Complex64::new(0.0, 0.0); m * m * m];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                out[i + m * (j + m * k)] = Complex64::new(f.at(i, j, k), 0.0);
            }
        }
    }
    out
}

fn restrict(data: &[Complex64], grid: Grid, m: usize) -> ScalarField3 {
    let vals = (0..grid.len())
        .map(|idx| {
            let [i, j, k] = grid.unflatten(idx);
            data[i + m * (j + m * k)].re
        })
        .collect();
    ScalarField3::from_values(grid, vals).expect("same grid")
}

/// Signed frequency index for bin `q` of an `m`-point transform.
fn freq(q: usize, m: usize) -> f64 {
    if 2 * q < m {
        q as f64
    } else {
        q as f64 - m as f64
    }
}

/// Quadrature of convolutions against `grad K`, `K = -1/(4 pi r)`, on one
/// grid: `h^3 sum_y grad K(x - y) f(y)` with the self-cell weight set to
/// zero. The sum is evaluated exactly (up to rounding) by a zero-padded FFT.
pub struct LerayOperator {
    grid: Grid,
    fft: Fft3,
    spectra: [Vec<Complex64>; 3],
}

impl LerayOperator {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let m = 2 * n;
        let fft = Fft3::new(m);
        let h = grid.h();
        let h3 = h * h * h;
        let spectra = std::array::from_fn(|axis| {
            let mut table = vec![Complex64::new(0.0, 0.0); m * m * m];
            let wrap = |q: usize| if q < n { q as f64 } else { q as f64 - m as f64 };
            table.par_iter_mut().enumerate().for_each(|(idx, v)| {
                let (i, j, k) = (idx % m, (idx / m) % m, idx / (m * m));
                if i == n || j == n || k == n || idx == 0 {
                    return;
                }
                let x = [wrap(i) * h, wrap(j) * h, wrap(k) * h];
                let g = newtonian_gradient(x).expect("off the origin");
                *v = Complex64::new(h3 * g[axis], 0.0);
            });
            fft.run(&mut table, false);
            table
        });
        Self { grid: *grid, fft, spectra }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, f: &ScalarField3) -> Vec<Complex64> {
        let mut d = embed(f, self.fft.m);
        self.fft.run(&mut d, false);
        d
    }

    fn back(&self, mut d: Vec<Complex64>) -> ScalarField3 {
        self.fft.run(&mut d, true);
        restrict(&d, self.grid, self.fft.m)
    }

    /// `grad K * f`, i.e. `grad (Delta^{-1} f)` up to quadrature error.
    pub fn gradient_potential(&self, f: &ScalarField3) -> VectorField3 {
        let fh = self.transform(f);
        let comps = std::array::from_fn(|a| {
            let d = fh.par_iter().zip(&self.spectra[a]).map(|(x, y)| x * y).collect();
            self.back(d)
        });
        VectorField3::new(comps).expect("same grid")
    }

    /// Velocity `v = -(grad K) x* omega`, so that `curl v = omega` for
    /// decaying divergence-free `v`.
    pub fn biot_savart(&self, w: &VectorField3) -> VectorField3 {
        let wh: Vec<Vec<Complex64>> = w.components().iter().map(|c| self.transform(c)).collect();
        let comps = std::array::from_fn(|i| {
            let (a, b) = ((i + 1) % 3, (i + 2) % 3);
            let d = (0..wh[0].len())
                .into_par_iter()
                .map(|q| self.spectra[b][q] * wh[a][q] - self.spectra[a][q] * wh[b][q])
                .collect();
            self.back(d)
        });
        VectorField3::new(comps).expect("same grid")
    }

    pub fn leray_term(&self, v: &VectorField3) -> VectorField3 {
        self.gradient_potential(&leray_source(v))
    }
}

/// `S = sum_{j,m} v_{m,j} v_{j,m}`.
pub fn leray_source(v: &VectorField3) -> ScalarField3 {
    let g: Vec<Vec<ScalarField3>> = (0..3)
        .map(|m| (0..3).map(|j| partial(v.component(m), j)).collect())
        .collect();
    let mut s = ScalarField3::zeros(*v.grid());
    for j in 0..3 {
        for m in 0..3 {
            s.axpy(1.0, &g[m][j].mul(&g[j][m]));
        }
    }
    s
}

/// `int grad K(x - y) S(y) dy` with `S` built from `v` by finite differences.
pub fn leray_term(v: &VectorField3) -> VectorField3 {
    LerayOperator::new(v.grid()).leray_term(v)
}

/// The same quadrature sum as [`LerayOperator::gradient_potential`],
/// evaluated node by node. Quadratic cost; for cross-checks on small grids.
pub fn gradient_potential_direct(f: &ScalarField3) -> VectorField3 {
    let grid = *f.grid();
    let h3 = grid.h().powi(3);
    let src: Vec<(usize, f64)> = f
        .values()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let out: Vec<[f64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let px = grid.point(x);
            let mut acc = [0.0; 3];
            for &(y, s) in &src {
                if y == x {
                    continue;
                }
                let py = grid.point(y);
                let g = newtonian_gradient([px[0] - py[0], px[1] - py[1], px[2] - py[2]]).expect("distinct nodes");
                for a in 0..3 {
                    acc[a] += h3 * g[a] * s;
                }
            }
            acc
        })
        .collect();
    VectorField3::new(std::array::from_fn(|a| {
        ScalarField3::from_values(grid, out.iter().map(|v| v[a]).collect()).expect("same grid")
    }))
    .expect("same grid")
}

/// Free-space `grad Delta^{-1} f` from a periodic spectral solve on a box
/// twice the grid's side, with `f` zero-padded. Independent oracle.
pub fn spectral_poisson_gradient(f: &ScalarField3) -> VectorField3 {
    spectral_poisson_gradient_padded(f, 2)
}

/// [`spectral_poisson_gradient`] on a box `factor` times the grid's side.
pub fn spectral_poisson_gradient_padded(f: &ScalarField3, factor: usize) -> VectorField3 {
    let grid = *f.grid();
    let m = factor.max(1) * grid.n();
    let fft = Fft3::new(m);
    let mut fh = embed(f, m);
    fft.run(&mut fh, false);
    let dk = 2.0 * PI / (m as f64 * grid.h());
    let comps = std::array::from_fn(|a| {
        let mut d: Vec<Complex64> = fh
            .par_iter()
            .enumerate()
            .map(|(idx, v)| {
                let q = [idx % m, (idx / m) % m, idx / (m * m)];
                if q.iter().any(|&c| 2 * c == m) {
                    return Complex64::new(0.0, 0.0);
                }
                let kv = q.map(|c| freq(c, m) * dk);
                let k2 = kv.iter().map(|x| x * x).sum::<f64>();
                if k2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    v * Complex64::new(0.0, -kv[a] / k2)
                }
            })
            .collect();
        fft.run(&mut d, true);
        restrict(&d, grid, m)
    });
    VectorField3::new(comps).expect("same grid")
}

/// Helmholtz projection onto divergence-free fields on the grid's periodic
/// box: `w_hat - kappa (kappa . w_hat) / |kappa|^2`.
pub fn leray_project(w: &VectorField3) -> VectorField3 {
    let grid = *w.grid();
    let n = grid.n();
    let fft = Fft3::new(n);
    let mut wh: Vec<Vec<Complex64>> = w
        .components()
        .iter()
        .map(|c| {
            let mut d = embed(c, n);
            fft.run(&mut d, false);
            d
        })
        .collect();
    let dk = 2.0 * PI / (n as f64 * grid.h());
    let (a, rest) = wh.split_at_mut(1);
    let (b, c) = rest.split_at_mut(1);
    a[0].par_iter_mut()
        .zip(b[0].par_iter_mut())
        .zip(c[0].par_iter_mut())
        .enumerate()
        .for_each(|(idx, ((x, y), z))| {
            let q = [idx % n, (idx / n) % n, idx / (n * n)];
            let kv = q.map(|c| freq(c, n) * dk);
            let k2 = kv.iter().map(|v| v * v).sum::<f64>();
            if k2 == 0.0 {
                return;
            }
            let dot = (*x * kv[0] + *y * kv[1] + *z * kv[2]) / k2;
            *x -= dot * kv[0];
            *y -= dot * kv[1];
            *z -= dot * kv[2];
        });
    let comps: Vec<ScalarField3> = wh
        .into_iter()
        .map(|mut d| {
            fft.run(&mut d, true);
            restrict(&d, grid, n)
        })
        .collect();
    let [x, y, z]: [ScalarField3; 3] = comps.try_into().expect("three components");
    VectorField3::new([x, y, z]).expect("same grid")
}

/// Velocity from vorticity by the Biot-Savart law.
pub fn biot_savart_velocity(w: &VectorField3) -> VectorField3 {
    LerayOperator::new(w.grid()).biot_savart(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cutoff_phi1;
    use crate::field::{curl, divergence, gradient};

    fn rotation(grid: Grid, core: f64) -> VectorField3 {
        VectorField3::from_fn(grid, move |p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let c = cutoff_phi1(r / core);
            [-p[1] * c, p[0] * c, 0.0]
        })
    }

    fn max_diff_where(a: &VectorField3, b: &VectorField3, keep: impl Fn([f64; 3]) -> bool) -> (f64, f64) {
        let g = a.grid();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in (0..g.len()).filter(|&i| keep(g.point(i))) {
            for c in 0..3 {
                err = err.max((a.component(c).values()[i] - b.component(c).values()[i]).abs());
                scale = scale.max(b.component(c).values()[i].abs());
            }
        }
        (err, scale)
    }

    #[test]
    fn zero_velocity_gives_zero() {
        let g = Grid::new(2.0, 9).unwrap();
        assert_eq!(leray_term(&VectorField3::zeros(g)).max_abs(), 0.0);
    }

    #[test]
    fn rigid_core_source_is_minus_two() {
        let g = Grid::new(2.0, 33).unwrap();
        let s = leray_source(&rotation(g, 0.6));
        for i in (0..g.len()).filter(|&i| g.radius(i) < 0.45) {
            assert!((s.values()[i] + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_sum_matches_direct_sum() {
        let g = Grid::new(2.0, 13).unwrap();
        let f = ScalarField3::from_fn(g, |p| (-(p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2])).exp() * (1.0 + p[0]));
        let a = LerayOperator::new(&g).gradient_potential(&f);
        let b = gradient_potential_direct(&f);
        assert!(a.sub(&b).max_abs() < 1e-12 * b.max_abs());
    }

    #[test]
    fn matches_spectral_oracle_in_the_core_on_a_fine_grid() {
        let g = Grid::new(2.0, 65).unwrap();
        let v = rotation(g, 0.6);
        let s = leray_source(&v);
        let a = LerayOperator::new(&g).gradient_potential(&s);
        let b = spectral_poisson_gradient(&s);
        let (err, scale) = max_diff_where(&a, &b, |p| p.iter().map(|x| x * x).sum::<f64>().sqrt() < 0.6);
        assert!(err < 1e-3 * scale, "{}", err / scale);
    }

    #[test]
    fn constant_shift_leaves_term_unchanged() {
        let g = Grid::new(2.0, 17).unwrap();
        let v = rotation(g, 0.5);
        let shifted = v.add(&VectorField3::from_fn(g, |_| [0.3, -1.0, 2.0]));
        let op = LerayOperator::new(&g);
        assert!(op.leray_term(&v).sub(&op.leray_term(&shifted)).max_abs() < 1e-10);
    }

    #[test]
    fn projection_is_idempotent_and_keeps_solenoidal_fields() {
        let g = Grid::new(4.0, 33).unwrap();
        let w = VectorField3::from_fn(g, |p| {
            let e = (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
            [p[0] * e, (p[1] - p[2]).sin() * e, e]
        });
        let p1 = leray_project(&w);
        let p2 = leray_project(&p1);
        assert!(p1.sub(&p2).max_abs() < 1e-8);

        // Analytic curl of a Gaussian vector potential.
        let sol = VectorField3::from_fn(g, |p| {
            let e = (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
            // A = (0, 0, e): curl A = (de/dy, -de/dx, 0).
            [-2.0 * p[1] * e, 2.0 * p[0] * e, 0.0]
        });
        assert!(leray_project(&sol).sub(&sol).max_abs() < 1e-6);
    }

    #[test]
    fn projection_kills_discrete_gradients_at_second_order() {
        let residual = |n: usize| {
            let g = Grid::new(4.0, n).unwrap();
            let phi = ScalarField3::from_fn(g, |p| (-(p[0] * p[0] + 0.5 * p[1] * p[1] + p[2] * p[2])).exp() * (1.0 + p[0]));
            leray_project(&gradient(&phi)).max_abs()
        };
        let (a, b) = (residual(33), residual(65));
        let rate = (a / b).log2();
        assert!((rate - 2.0).abs() < 0.3, "{a} {b} {rate}");
    }

    #[test]
    fn biot_savart_recovers_velocity_from_vorticity() {
        let error = |n: usize| {
            let g = Grid::new(4.0, n).unwrap();
            let v = VectorField3::from_fn(g, |p| {
                let e = (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
                [-2.0 * p[1] * e, 2.0 * p[0] * e, 0.0]
            });
            let u = biot_savart_velocity(&curl(&v));
            let (err, scale) = max_diff_where(&u, &v, |p| p.iter().map(|x| x * x).sum::<f64>().sqrt() < 2.0);
            err / scale
        };
        let (a, b) = (error(33), error(65));
        assert!(b < 0.03, "{b}");
        let rate = (a / b).log2();
        assert!((rate - 2.0).abs() < 0.3, "{a} {b} {rate}");
    }

    #[test]
    fn removes_divergence_of_the_advective_term() {
        // div(B - L) = div B - S for div v = 0, up to O(h^2).
        let residual = |n: usize| {
            let g = Grid::new(4.0, n).unwrap();
            let v = VectorField3::from_fn(g, |p| {
                let e = (-0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
                [-p[1] * e, p[0] * e - p[2] * e, p[1] * e]
            });
            let b = VectorField3::new(std::array::from_fn(|i| {
                let mut acc = ScalarField3::zeros(g);
                for j in 0..3 {
                    acc.axpy(1.0, &v.component(j).mul(&partial(v.component(i), j)));
                }
                acc
            }))
            .unwrap();
            let d = divergence(&b.sub(&leray_term(&v)));
            (0..g.len())
                .filter(|&i| g.radius(i) < 2.0)
                .map(|i| d.values()[i].abs())
                .fold(0.0, f64::max)
        };
        let (a, b) = (residual(33), residual(65));
        assert!(b < a / 3.0, "{a} {b}");
    }
}
