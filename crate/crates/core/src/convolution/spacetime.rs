use rayon::prelude::*;

use super::spatial::{ConvPath, SeparableKernel};
use crate::error::{Error, Result};
use crate::field::{Grid, MultiIndex, VectorField3};
use crate::kernels::HeatKernelSpec;
use crate::util::gauss_legendre;

/// Vector fields on uniform time nodes `t0 + m (t1 - t0) / (len - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlab {
    t0: f64,
    t1: f64,
    slices: Vec<VectorField3>,
}

impl TimeSlab {
    pub fn new(t0: f64, t1: f64, slices: Vec<VectorField3>) -> Result<Self> {
        if !(t1 > t0) || !(t0 >= 0.0) {
            return Err(Error::Parameter {
                name: "t1",
                value: t1,
                reason: "time slab needs t1 > t0 >= 0",
            });
        }
        if slices.len() < 2 {
            return Err(Error::InsufficientSlices(format!(
                "time slab needs at least 2 slices, got {}",
                slices.len()
            )));
        }
        let grid = *slices[0].grid();
        if slices.iter().any(|s| *s.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { t0, t1, slices })
    }

    pub fn from_fn<F>(t0: f64, t1: f64, n_t: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> VectorField3 + Sync + Send,
    {
        if n_t < 2 {
            return Err(Error::InsufficientSlices(format!("n_t = {n_t}")));
        }
        let dt = (t1 - t0) / (n_t - 1) as f64;
        let slices = (0..n_t).into_par_iter().map(|m| f(t0 + m as f64 * dt)).collect();
        Self::new(t0, t1, slices)
    }

    pub fn constant(field: &VectorField3, t0: f64, t1: f64, n_t: usize) -> Result<Self> {
        Self::new(t0, t1, vec![field.clone(); n_t.max(1)])
    }

    pub fn zeros(grid: Grid, t0: f64, t1: f64, n_t: usize) -> Result<Self> {
        Self::constant(&VectorField3::zeros(grid), t0, t1, n_t)
    }

    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.len() - 1) as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m + 1 == self.len() {
            self.t1
        } else {
            self.t0 + m as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.time(m)).collect()
    }

    pub fn slice(&self, m: usize) -> &VectorField3 {
        &self.slices[m]
    }

    pub fn slices(&self) -> &[VectorField3] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<VectorField3> {
        self.slices
    }

    /// Node index of `t`, if `t` is one of the slab's nodes.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let m = x.round();
        if (x - m).abs() < 1e-9 && m >= 0.0 && (m as usize) < self.len() {
            Some(m as usize)
        } else {
            None
        }
    }

    pub fn map<F>(&self, f: F) -> Result<TimeSlab>
    where
        F: Fn(&VectorField3) -> VectorField3 + Sync + Send,
    {
        TimeSlab::new(self.t0, self.t1, self.slices.par_iter().map(f).collect())
    }

    pub fn sub(&self, other: &TimeSlab) -> Result<TimeSlab> {
        self.check_aligned(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.sub(b)).collect();
        TimeSlab::new(self.t0, self.t1, slices)
    }

    pub fn check_aligned(&self, other: &TimeSlab) -> Result<()> {
        if self.len() != other.len() || self.t0 != other.t0 || self.t1 != other.t1 {
            return Err(Error::InsufficientSlices("time slabs are not aligned".into()));
        }
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

const ENDPOINT_NODES: usize = 4;

/// Duhamel integral `int_{t0}^{t} D^gamma G_nu(t - s) *_sp f(s) ds` on all
/// slab nodes, with the 1-D kernels cached per lag.
///
/// Composite trapezoid in `s`; the lag-zero endpoint uses the identity for
/// `gamma = 0`. For `|gamma| = 1` the last subinterval is integrated in
/// `u = sqrt(t - s)`, which absorbs the `(t - s)^{-1/2}` growth of the
/// integrand, with `f` interpolated linearly in time.
pub struct Duhamel {
    nu: f64,
    gamma: MultiIndex,
    dt: f64,
    lags: Vec<SeparableKernel>,
    endpoint: Vec<(f64, f64, SeparableKernel)>,
}

impl Duhamel {
    pub fn new(grid: &Grid, nu: f64, dt: f64, n_nodes: usize, gamma: MultiIndex) -> Result<Self> {
        HeatKernelSpec::new(nu, dt, gamma)?;
        if gamma.order() > 1 {
            return Err(Error::DerivativeOrder(gamma.order()));
        }
        let lags = (0..n_nodes)
            .into_par_iter()
            .map(|m| SeparableKernel::new(grid, nu * m as f64 * dt, gamma))
            .collect::<Result<Vec<_>>>()?;
        let endpoint = if gamma.order() == 1 {
            gauss_legendre(ENDPOINT_NODES, 0.0, dt.sqrt())
                .into_iter()
                .map(|(u, w)| Ok((u * u, 2.0 * u * w, SeparableKernel::new(grid, nu * u * u, gamma)?)))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            nu,
            gamma,
            dt,
            lags,
            endpoint,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn gamma(&self) -> MultiIndex {
        self.gamma
    }

    fn check(&self, slab: &TimeSlab, n: usize) -> Result<()> {
        if n >= self.lags.len() || n >= slab.len() || (slab.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::InsufficientSlices(format!(
                "node {n}: kernel cache built for {} nodes at dt = {}, slab has {} at dt = {}",
                self.lags.len(),
                self.dt,
                slab.len(),
                slab.dt()
            )));
        }
        Ok(())
    }

    /// Value at node `n` (zero at `n = 0`).
    pub fn at_node(&self, slab: &TimeSlab, n: usize) -> Result<VectorField3> {
        self.check(slab, n)?;
        let grid = *slab.grid();
        let mut acc = VectorField3::zeros(grid);
        if n == 0 {
            return Ok(acc);
        }
        let dt = self.dt;
        let derivative = self.gamma.order() == 1;
        // Trapezoid nodes: 0..=n, or 0..=n-1 when the last subinterval is
        // handled separately.
        let last = if derivative { n - 1 } else { n };
        for m in 0..=last {
            if last == 0 {
                break;
            }
            let w = if m == 0 || m == last { 0.5 * dt } else { dt };
            acc.axpy(w, &self.lags[n - m].apply_vector(slab.slice(m)));
        }
        if derivative {
            for (tau, w, k) in &self.endpoint {
                let theta = tau / dt;
                let mut f = slab.slice(n).scaled(1.0 - theta);
                f.axpy(theta, slab.slice(n - 1));
                acc.axpy(*w, &k.apply_vector(&f));
            }
        }
        Ok(acc)
    }

    pub fn all_nodes(&self, slab: &TimeSlab) -> Result<Vec<VectorField3>> {
        self.check(slab, slab.len() - 1)?;
        (0..slab.len()).into_par_iter().map(|n| self.at_node(slab, n)).collect()
    }
}

/// `int_{t0}^{t_eval} D^gamma G_nu(t_eval - s) *_sp slice(s) ds`; `t_eval`
/// must be a slab node.
pub fn conv_spacetime(
    slab: &TimeSlab,
    nu: f64,
    t_eval: f64,
    gamma: MultiIndex,
    path: ConvPath,
) -> Result<VectorField3> {
    let n = slab.node_of(t_eval).ok_or_else(|| {
        Error::InsufficientSlices(format!(
            "t_eval = {t_eval} is not a node of the slab on [{}, {}] with {} slices",
            slab.t0(),
            slab.t1(),
            slab.len()
        ))
    })?;
    if path == ConvPath::DirectQuadrature {
        return direct_spacetime(slab, nu, n, gamma);
    }
    Duhamel::new(slab.grid(), nu, slab.dt(), n + 1, gamma)?.at_node(slab, n)
}

fn direct_spacetime(slab: &TimeSlab, nu: f64, n: usize, gamma: MultiIndex) -> Result<VectorField3> {
    use super::spatial::conv_spatial_vector;
    let dt = slab.dt();
    let mut acc = VectorField3::zeros(*slab.grid());
    if n == 0 {
        return Ok(acc);
    }
    let derivative = gamma.order() == 1;
    let last = if derivative { n - 1 } else { n };
    for m in 0..=last {
        if last == 0 {
            break;
        }
        let w = if m == 0 || m == last { 0.5 * dt } else { dt };
        if m == n {
            acc.axpy(w, slab.slice(n));
        } else {
            let lag = (n - m) as f64 * dt;
            acc.axpy(w, &conv_spatial_vector(slab.slice(m), nu, lag, gamma, ConvPath::DirectQuadrature)?);
        }
    }
    if derivative {
        for (u, wu) in gauss_legendre(ENDPOINT_NODES, 0.0, dt.sqrt()) {
            let tau = u * u;
            let theta = tau / dt;
            let mut f = slab.slice(n).scaled(1.0 - theta);
            f.axpy(theta, slab.slice(n - 1));
            let k = conv_spatial_vector(&f, nu, tau, gamma, ConvPath::DirectQuadrature)?;
            acc.axpy(2.0 * u * wu, &k);
        }
    }
    Ok(acc)
}
