use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Grid, MultiIndex, ScalarField3, VectorField3};
use crate::kernels::{gauss_eval, HeatKernelSpec};

/// Evaluation strategy for Gaussian convolutions. Both produce the same
/// discrete operator; the direct path sums the full 3-D kernel table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvPath {
    DirectQuadrature,
    #[default]
    FastSeparable,
}

impl ConvPath {
    pub fn label(&self) -> &'static str {
        match self {
            ConvPath::DirectQuadrature => "direct",
            ConvPath::FastSeparable => "separable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" | "DirectQuadrature" => Some(ConvPath::DirectQuadrature),
            "separable" | "FastSeparable" => Some(ConvPath::FastSeparable),
            _ => None,
        }
    }
}

/// Mass of the heat kernel at `nu t` outside the centered cube of
/// half-width `R / 2`.
pub fn kernel_tail_mass(grid: &Grid, nu: f64, t: f64) -> f64 {
    let inside = 1.0 - libm::erfc(grid.extent() / (4.0 * (nu * t).sqrt()));
    1.0 - inside.powi(3)
}

/// Strict form of the kernel-support check.
pub fn check_kernel_support(grid: &Grid, nu: f64, t: f64) -> Result<()> {
    let tail = kernel_tail_mass(grid, nu, t);
    if tail > 1e-4 {
        Err(Error::KernelOverflowsDomain { tail })
    } else {
        Ok(())
    }
}

// Offsets beyond this many standard widths carry less than 1e-17 of the peak.
const WIDTHS: f64 = 8.9;

fn half_width(h: f64, nu_t: f64, n: usize) -> usize {
    ((WIDTHS * (2.0 * nu_t).sqrt() / h).ceil() as usize).clamp(1, n - 1)
}

/// 1-D heat kernel on offsets `-m..=m` (index `j + m`).
///
/// The point samples are normalized to unit mass; the derivative kernel is
/// normalized to first moment `-1`, so it reproduces `d/dx` on linear data
/// exactly and tends to the centered difference as `nu t -> 0`.
fn kernel_1d(h: f64, nu_t: f64, derivative: bool, m: usize) -> Vec<f64> {
    let c = h * h / (4.0 * nu_t);
    let js = -(m as isize)..=(m as isize);
    if !derivative {
        let raw: Vec<f64> = js.map(|j| (-c * (j * j) as f64).exp()).collect();
        let mass: f64 = raw.iter().sum();
        raw.into_iter().map(|e| e / mass).collect()
    } else {
        let raw: Vec<f64> = js
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    -(j as f64) * h * (-c * ((j * j) as f64 - 1.0)).exp()
                }
            })
            .collect();
        let moment: f64 = raw
            .iter()
            .enumerate()
            .map(|(o, w)| (o as f64 - m as f64) * h * w)
            .sum();
        raw.into_iter().map(|w| -w / moment).collect()
    }
}

/// Tensor-product heat kernel (or first derivative) at fixed `nu t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKernel {
    axes: [Vec<f64>; 3],
}

impl SeparableKernel {
    /// `nu_t = 0` gives the identity (or the centered difference).
    pub fn new(grid: &Grid, nu_t: f64, gamma: MultiIndex) -> Result<Self> {
        if gamma.order() > 1 {
            return Err(Error::DerivativeOrder(gamma.order()));
        }
        if !(nu_t >= 0.0) || !nu_t.is_finite() {
            return Err(Error::KernelParams { nu: nu_t, t: 1.0 });
        }
        let axes = std::array::from_fn(|a| {
            let d = gamma.0[a] == 1;
            if nu_t == 0.0 {
                if d {
                    vec![0.5 / grid.h(), 0.0, -0.5 / grid.h()]
                } else {
                    vec![1.0]
                }
            } else {
                kernel_1d(grid.h(), nu_t, d, half_width(grid.h(), nu_t, grid.n()))
            }
        });
        Ok(Self { axes })
    }

    pub fn axis(&self, a: usize) -> &[f64] {
        &self.axes[a]
    }

    /// Weight of the offset `(a, b, c)` in the full 3-D table.
    pub fn weight(&self, off: [isize; 3]) -> f64 {
        (0..3)
            .map(|a| {
                let w = &self.axes[a];
                let m = (w.len() / 2) as isize;
                if off[a].abs() > m {
                    0.0
                } else {
                    w[(off[a] + m) as usize]
                }
            })
            .product()
    }

    pub fn apply(&self, f: &ScalarField3) -> ScalarField3 {
        let grid = *f.grid();
        let mut vals = f.values().to_vec();
        for a in 0..3 {
            if self.axes[a].len() > 1 {
                vals = pass_1d(&vals, &grid, a, &self.axes[a]);
            } else if self.axes[a][0] != 1.0 {
                vals.iter_mut().for_each(|v| *v *= self.axes[a][0]);
            }
        }
        ScalarField3::from_values(grid, vals).expect("same grid")
    }

    pub fn apply_vector(&self, v: &VectorField3) -> VectorField3 {
        v.map_components(|c| self.apply(c))
    }
}

/// `out[i] = sum_j w_j f[i - j]` along one axis, zero outside the grid.
fn pass_1d(f: &[f64], grid: &Grid, axis: usize, w: &[f64]) -> Vec<f64> {
    let n = grid.n() as isize;
    let m = (w.len() / 2) as isize;
    let stride = [1, grid.n(), grid.n() * grid.n()][axis];
    (0..f.len())
        .into_par_iter()
        .map(|idx| {
            let pos = ((idx / stride) % grid.n()) as isize;
            let base = idx - pos as usize * stride;
            let lo = (-m).max(pos - n + 1);
            let hi = m.min(pos);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += w[(j + m) as usize] * f[base + (pos - j) as usize * stride];
            }
            acc
        })
        .collect()
}

/// Full 3-D kernel table for the direct path, built from the closed-form
/// kernel and normalized like the separable one.
struct DirectKernel {
    half: [usize; 3],
    table: Vec<f64>,
}

impl DirectKernel {
    fn new(grid: &Grid, nu: f64, t: f64, gamma: MultiIndex) -> Result<Self> {
        let spec = HeatKernelSpec::new(nu, t, gamma)?;
        let sep = SeparableKernel::new(grid, nu * t, gamma)?;
        let half: [usize; 3] = std::array::from_fn(|a| sep.axis(a).len() / 2);
        let h = grid.h();
        let dims = half.map(|m| 2 * m + 1);
        let mut table = Vec::with_capacity(dims.iter().product());
        let mut moment = 0.0;
        for c in 0..dims[2] {
            for b in 0..dims[1] {
                for a in 0..dims[0] {
                    let off = [
                        a as f64 - half[0] as f64,
                        b as f64 - half[1] as f64,
                        c as f64 - half[2] as f64,
                    ];
                    let val = gauss_eval(&spec, off.map(|o| o * h));
                    moment += match gamma.axis() {
                        None => val,
                        Some(ax) => -off[ax] * h * val,
                    };
                    table.push(val);
                }
            }
        }
        if moment > 0.0 && moment.is_finite() {
            table.iter_mut().for_each(|v| *v /= moment);
        } else {
            // Below grid resolution the closed form underflows; fall back to
            // the tensor table of the separable kernel.
            log::debug!("direct kernel underflow at nu t = {}", nu * t);
            table.clear();
            for c in 0..dims[2] as isize {
                for b in 0..dims[1] as isize {
                    for a in 0..dims[0] as isize {
                        table.push(sep.weight([
                            a - half[0] as isize,
                            b - half[1] as isize,
                            c - half[2] as isize,
                        ]));
                    }
                }
            }
        }
        Ok(Self { half, table })
    }

    fn apply(&self, f: &ScalarField3) -> ScalarField3 {
        let grid = *f.grid();
        let n = grid.n() as isize;
        let [mx, my, mz] = self.half.map(|m| m as isize);
        let (dx, dy) = (2 * mx + 1, 2 * my + 1);
        let src = f.values();
        let vals = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let [i, j, k] = grid.unflatten(idx).map(|v| v as isize);
                let mut acc = 0.0;
                for c in (-mz).max(k - n + 1)..=mz.min(k) {
                    for b in (-my).max(j - n + 1)..=my.min(j) {
                        let row = ((c + mz) * dy + (b + my)) * dx + mx;
                        let srow = ((k - c) * n + (j - b)) * n;
                        for a in (-mx).max(i - n + 1)..=mx.min(i) {
                            acc += self.table[(row + a) as usize] * src[(srow + i - a) as usize];
                        }
                    }
                }
                acc
            })
            .collect();
        ScalarField3::from_values(grid, vals).expect("same grid")
    }
}

/// `(f *_sp D^gamma G_nu(t))` with `|gamma| <= 1`; the field is taken to be
/// zero outside the grid. Logs a warning when more than `1e-4` of the kernel
/// mass falls outside the half-width `R / 2`.
pub fn conv_spatial(
    f: &ScalarField3,
    nu: f64,
    t: f64,
    gamma: MultiIndex,
    path: ConvPath,
) -> Result<ScalarField3> {
    HeatKernelSpec::new(nu, t, gamma)?;
    if gamma.order() > 1 {
        return Err(Error::DerivativeOrder(gamma.order()));
    }
    if let Err(e) = check_kernel_support(f.grid(), nu, t) {
        log::warn!("{e}");
    }
    Ok(match path {
        ConvPath::FastSeparable => SeparableKernel::new(f.grid(), nu * t, gamma)?.apply(f),
        ConvPath::DirectQuadrature => DirectKernel::new(f.grid(), nu, t, gamma)?.apply(f),
    })
}

pub fn conv_spatial_vector(
    v: &VectorField3,
    nu: f64,
    t: f64,
    gamma: MultiIndex,
    path: ConvPath,
) -> Result<VectorField3> {
    let comps = v
        .components()
        .iter()
        .map(|c| conv_spatial(c, nu, t, gamma, path))
        .collect::<Result<Vec<_>>>()?;
    let [a, b, c]: [ScalarField3; 3] = comps.try_into().expect("three components");
    VectorField3::new([a, b, c])
}
