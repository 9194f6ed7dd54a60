//! Picard iteration on `[0, T]` for the viscous time-reversed Euler equation
//! in velocity form, with the companion vorticity scheme.
//!
//! Every step recomputes all time slices: the scheme is a fixed point in the
//! whole slab, not a time-marching method.

mod trace;
mod vorticity;

use rayon::prelude::*;

use crate::convolution::{
    conv_spacetime, conv_spatial_vector, ConvPath, Duhamel, LerayOperator, TimeSlab,
};
use crate::data::{build_velocity_data, build_vorticity_data, DataSpec};
use crate::error::{Error, Result};
use crate::field::{curl, partial, Grid, MultiIndex, NormKind, ScalarField3, VectorField3};

pub use trace::{IterationTrace, NormRecord, Quantity};
pub use vorticity::{transport_stretching, vorticity_increment_recursion, vorticity_step};

/// Signs of the nonlinear terms. The default is `+` for the transport term
/// and `-` for the pressure (Leray) term; any flip makes the scheme solve a
/// different equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignPack {
    pub flip_burgers: bool,
    pub flip_leray: bool,
}

impl SignPack {
    pub fn burgers(&self) -> f64 {
        if self.flip_burgers {
            -1.0
        } else {
            1.0
        }
    }

    pub fn leray(&self) -> f64 {
        if self.flip_leray {
            1.0
        } else {
            -1.0
        }
    }
}

/// How many Picard states the trace keeps in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retention {
    All,
    /// The most recent `n` states (at least 3, enough for the increment
    /// recursion).
    Last(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    pub nu: f64,
    /// Horizon `T`.
    pub t_final: f64,
    /// Number of time intervals; the slab has `n_steps + 1` nodes.
    pub n_steps: usize,
    pub k_max: usize,
    pub data: DataSpec,
    pub grid: Grid,
    pub conv_path: ConvPath,
    pub signs: SignPack,
    /// Early stop once the sup-in-time `C^2` norm of `dv^k` drops below this.
    pub stop_tol: f64,
    pub track_vorticity: bool,
    pub retention: Retention,
    /// Norms recorded for every increment and time slice.
    pub norms: Vec<NormKind>,
}

impl IterationConfig {
    pub fn new(nu: f64, t_final: f64, data: DataSpec, grid: Grid) -> Self {
        Self {
            nu,
            t_final,
            n_steps: 16,
            k_max: 8,
            data,
            grid,
            conv_path: ConvPath::FastSeparable,
            signs: SignPack::default(),
            stop_tol: 1e-10,
            track_vorticity: false,
            retention: Retention::All,
            norms: vec![NormKind::Cm(0), NormKind::HmCm(2), NormKind::HmCm(3)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::Parameter { name, value, reason });
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad("nu", self.nu, "must be positive");
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("T", self.t_final, "must be positive");
        }
        if self.n_steps == 0 {
            return bad("n_steps", 0.0, "need at least one time interval");
        }
        if self.k_max < 3 {
            return bad("k_max", self.k_max as f64, "increment analysis needs k_max >= 3");
        }
        if let Retention::Last(n) = self.retention {
            if n < 3 {
                return bad("retention", n as f64, "keep at least 3 states");
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }
}

/// One Picard iterate on every slab node.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub v: TimeSlab,
    pub omega: Option<TimeSlab>,
}

/// `(v . grad) v`: component `i` is `sum_j v_j d_j v_i`.
pub fn burgers_term(v: &VectorField3) -> VectorField3 {
    VectorField3::new(std::array::from_fn(|i| {
        let mut acc = ScalarField3::zeros(*v.grid());
        for j in 0..3 {
            acc.axpy(1.0, &v.component(j).mul(&partial(v.component(i), j)));
        }
        acc
    }))
    .expect("same grid")
}

/// The operators of one run: heat-semigroup data, Duhamel kernels, the
/// Leray operator, and an optional forcing slab.
pub struct PicardScheme {
    config: IterationConfig,
    duhamel: Option<Duhamel>,
    leray: LerayOperator,
    base: TimeSlab,
    omega_base: Option<TimeSlab>,
    forcing: Option<TimeSlab>,
}

impl PicardScheme {
    pub fn new(config: &IterationConfig) -> Result<Self> {
        let v_f = build_velocity_data(&config.data, &config.grid);
        Self::with_data(config, v_f, None)
    }

    /// Scheme for explicit velocity data and an optional forcing slab added
    /// to the nonlinear terms under the time integral.
    pub fn with_data(config: &IterationConfig, v_f: VectorField3, forcing: Option<TimeSlab>) -> Result<Self> {
        config.validate()?;
        if *v_f.grid() != config.grid {
            return Err(Error::GridMismatch);
        }
        let n_t = config.n_steps + 1;
        let (nu, path) = (config.nu, config.conv_path);
        let heat = |f: &VectorField3, t: f64| {
            if t == 0.0 {
                Ok(f.clone())
            } else {
                conv_spatial_vector(f, nu, t, MultiIndex::ZERO, path)
            }
        };
        let times: Vec<f64> = (0..n_t).map(|m| m as f64 * config.dt()).collect();
        let base = TimeSlab::new(
            0.0,
            config.t_final,
            times.par_iter().map(|&t| heat(&v_f, t)).collect::<Result<_>>()?,
        )?;
        let omega_base = if config.track_vorticity {
            let w_f = build_vorticity_data(&v_f);
            Some(TimeSlab::new(
                0.0,
                config.t_final,
                times.par_iter().map(|&t| heat(&w_f, t)).collect::<Result<_>>()?,
            )?)
        } else {
            None
        };
        if let Some(f) = &forcing {
            f.check_aligned(&base)?;
        }
        let duhamel = match path {
            ConvPath::FastSeparable => Some(Duhamel::new(&config.grid, nu, config.dt(), n_t, MultiIndex::ZERO)?),
            ConvPath::DirectQuadrature => None,
        };
        Ok(Self {
            config: config.clone(),
            duhamel,
            leray: LerayOperator::new(&config.grid),
            base,
            omega_base,
            forcing,
        })
    }

    pub fn config(&self) -> &IterationConfig {
        &self.config
    }

    /// `v^f *_sp G_nu(t)` on the slab nodes; the `t = 0` slice is `v^f`.
    pub fn base(&self) -> &TimeSlab {
        &self.base
    }

    pub fn omega_base(&self) -> Option<&TimeSlab> {
        self.omega_base.as_ref()
    }

    pub fn forcing(&self) -> Option<&TimeSlab> {
        self.forcing.as_ref()
    }

    pub fn leray(&self) -> &LerayOperator {
        &self.leray
    }

    /// `int_0^t G_nu(t - s) *_sp f(s) ds` on every node.
    pub fn duhamel(&self, f: &TimeSlab) -> Result<Vec<VectorField3>> {
        match &self.duhamel {
            Some(d) => d.all_nodes(f),
            None => (0..f.len())
                .map(|n| conv_spacetime(f, self.config.nu, f.time(n), MultiIndex::ZERO, ConvPath::DirectQuadrature))
                .collect(),
        }
    }

    /// Nonlinear source `s_B (v . grad) v + s_L grad K * S(v)` plus forcing.
    pub fn velocity_source(&self, v: &VectorField3, m: usize) -> VectorField3 {
        let signs = self.config.signs;
        let mut out = burgers_term(v).scaled(signs.burgers());
        out.axpy(signs.leray(), &self.leray.leray_term(v));
        if let Some(f) = &self.forcing {
            out.axpy(1.0, f.slice(m));
        }
        out
    }

    pub fn init(&self) -> IterationState {
        IterationState {
            k: 0,
            v: self.base.clone(),
            omega: self.omega_base.clone(),
        }
    }

    pub fn step(&self, prev: &IterationState) -> Result<IterationState> {
        let k = prev.k + 1;
        let src: Vec<VectorField3> = (0..prev.v.len())
            .into_par_iter()
            .map(|m| self.velocity_source(prev.v.slice(m), m))
            .collect();
        let src = TimeSlab::new(prev.v.t0(), prev.v.t1(), src)?;
        let v = self.add_base(&self.base, self.duhamel(&src)?, k)?;
        let omega = match (&self.omega_base, &prev.omega) {
            (Some(_), Some(w)) => Some(vorticity_step(self, w, &prev.v, k)?),
            _ => None,
        };
        Ok(IterationState { k, v, omega })
    }

    fn add_base(&self, base: &TimeSlab, integrals: Vec<VectorField3>, k: usize) -> Result<TimeSlab> {
        let slices = base
            .slices()
            .iter()
            .zip(integrals)
            .enumerate()
            .map(|(m, (b, d))| {
                let out = b.add(&d);
                if out.is_finite() {
                    Ok(out)
                } else {
                    Err(Error::NonFiniteField { k, t: base.time(m) })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        TimeSlab::new(base.t0(), base.t1(), slices)
    }

    /// Curl of the forcing, the vorticity-scheme counterpart of the forcing.
    fn forcing_curl(&self, m: usize) -> Option<VectorField3> {
        self.forcing.as_ref().map(|f| curl(f.slice(m)))
    }
}

/// State `k = 0`: the data under the heat semigroup on every node.
pub fn picard_init(config: &IterationConfig) -> Result<IterationState> {
    Ok(PicardScheme::new(config)?.init())
}

/// One step from `prev`. Rebuilds the operators; loops should hold a
/// [`PicardScheme`] instead.
pub fn picard_step(prev: &IterationState, config: &IterationConfig) -> Result<IterationState> {
    PicardScheme::new(config)?.step(prev)
}

pub fn run_picard(config: &IterationConfig) -> Result<IterationTrace> {
    IterationTrace::run(PicardScheme::new(config)?)
}

pub fn run_picard_with(config: &IterationConfig, v_f: VectorField3, forcing: Option<TimeSlab>) -> Result<IterationTrace> {
    IterationTrace::run(PicardScheme::with_data(config, v_f, forcing)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::conv_spatial_vector;
    use crate::data::{CompletionMode, RadialProfile};
    use crate::field::{discrete_norm, NormOptions};

    fn smooth_config(n: usize, t: f64) -> IterationConfig {
        let data = DataSpec::new(0, CompletionMode::ProjectedDivFree, RadialProfile::smooth()).unwrap();
        let mut c = IterationConfig::new(0.1, t, data, Grid::new(4.0, n).unwrap());
        c.n_steps = 4;
        c.k_max = 3;
        c
    }

    #[test]
    fn burgers_of_constant_is_zero() {
        let g = Grid::new(2.0, 9).unwrap();
        let v = VectorField3::from_fn(g, |_| [1.0, -2.0, 0.5]);
        assert_eq!(burgers_term(&v).max_abs(), 0.0);
    }

    #[test]
    fn burgers_of_linear_field() {
        let g = Grid::new(2.0, 9).unwrap();
        let v = VectorField3::from_fn(g, |p| [p[0], 0.0, 0.0]);
        let b = burgers_term(&v);
        for i in 0..g.len() {
            assert!((b.component(0).values()[i] - g.point(i)[0]).abs() < 1e-13);
        }
        assert_eq!(b.component(1).max_abs(), 0.0);
        assert_eq!(b.component(2).max_abs(), 0.0);
    }

    #[test]
    fn burgers_matches_symbolic_derivative_to_second_order() {
        // v = (sin y, cos x sin z, x e^{-z^2}) with hand-computed (v.grad)v.
        let err = |n: usize| {
            let g = Grid::new(1.5, n).unwrap();
            let v = VectorField3::from_fn(g, |p| {
                [p[1].sin(), p[0].cos() * p[2].sin(), p[0] * (-p[2] * p[2]).exp()]
            });
            let exact = VectorField3::from_fn(g, |p| {
                let (x, y, z) = (p[0], p[1], p[2]);
                let v = [y.sin(), x.cos() * z.sin(), x * (-z * z).exp()];
                let grad = [
                    [0.0, y.cos(), 0.0],
                    [-x.sin() * z.sin(), 0.0, x.cos() * z.cos()],
                    [(-z * z).exp(), 0.0, -2.0 * x * z * (-z * z).exp()],
                ];
                std::array::from_fn(|i| (0..3).map(|j| v[j] * grad[i][j]).sum())
            });
            let d = burgers_term(&v).sub(&exact);
            discrete_norm(&d, NormKind::Cm(0), &NormOptions::interior()).unwrap()
        };
        let rate = (err(33) / err(65)).log2();
        assert!((rate - 2.0).abs() < 0.3, "{} {} {rate}", err(33), err(65));
    }

    #[test]
    fn sign_pack_defaults() {
        let s = SignPack::default();
        assert_eq!((s.burgers(), s.leray()), (1.0, -1.0));
        let f = SignPack { flip_burgers: true, flip_leray: true };
        assert_eq!((f.burgers(), f.leray()), (-1.0, 1.0));
    }

    #[test]
    fn config_validation() {
        let mut c = smooth_config(9, 0.1);
        assert!(c.validate().is_ok());
        c.k_max = 2;
        assert!(c.validate().is_err());
        let mut c = smooth_config(9, 0.1);
        c.t_final = 0.0;
        assert!(c.validate().is_err());
        let mut c = smooth_config(9, 0.1);
        c.retention = Retention::Last(2);
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let mut c = smooth_config(13, 0.2);
        c.data.profile = RadialProfile::Zero;
        let scheme = PicardScheme::new(&c).unwrap();
        let mut s = scheme.init();
        for _ in 0..3 {
            s = scheme.step(&s).unwrap();
            assert!(s.v.slices().iter().all(|f| f.max_abs() == 0.0));
        }
    }

    #[test]
    fn init_holds_heat_evolved_data() {
        let mut c = smooth_config(65, 0.2);
        c.nu = 0.5;
        let s = picard_init(&c).unwrap();
        let v_f = build_velocity_data(&c.data, &c.grid);
        assert_eq!(s.v.slice(0), &v_f);
        // Semigroup: evolving slice 1 by the remaining time gives the last slice.
        let t1 = s.v.time(1);
        let rest = c.t_final - t1;
        let via = conv_spatial_vector(s.v.slice(1), c.nu, rest, MultiIndex::ZERO, c.conv_path).unwrap();
        // Zero extension outside the box breaks the semigroup near the faces.
        let g = c.grid;
        let diff = via.sub(s.v.slice(c.n_steps));
        let d = (0..g.len())
            .filter(|&i| g.point(i).iter().all(|x| x.abs() < 2.0))
            .flat_map(|i| (0..3).map(move |a| (i, a)))
            .map(|(i, a)| diff.component(a).values()[i].abs())
            .fold(0.0, f64::max);
        let scale = s.v.slice(c.n_steps).max_abs();
        assert!(d < 1e-6 * scale, "{}", d / scale);
    }

    #[test]
    fn step_reproduces_manual_duhamel_sum() {
        let c = smooth_config(13, 0.2);
        let scheme = PicardScheme::new(&c).unwrap();
        let s0 = scheme.init();
        let s1 = scheme.step(&s0).unwrap();
        let n = c.n_steps;
        let t = c.t_final;
        let src = TimeSlab::new(0.0, t, (0..=n).map(|m| scheme.velocity_source(s0.v.slice(m), m)).collect()).unwrap();
        let manual = conv_spacetime(&src, c.nu, t, MultiIndex::ZERO, ConvPath::DirectQuadrature).unwrap();
        let want = scheme.base().slice(n).add(&manual);
        assert!(s1.v.slice(n).sub(&want).max_abs() < 1e-10);
        assert_eq!(s1.v.slice(0), s0.v.slice(0));
    }

    #[test]
    fn picard_step_helper_matches_scheme() {
        let c = smooth_config(11, 0.1);
        let s0 = picard_init(&c).unwrap();
        let a = picard_step(&s0, &c).unwrap();
        let b = PicardScheme::new(&c).unwrap().step(&s0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_iterate_is_reported() {
        let c = smooth_config(11, 0.1);
        let scheme = PicardScheme::new(&c).unwrap();
        let mut s = scheme.init();
        let mut bad = s.v.slice(2).clone();
        bad.component_mut(1).values_mut()[100] = f64::NAN;
        let mut slices = s.v.clone().into_slices();
        slices[2] = bad;
        s.v = TimeSlab::new(0.0, c.t_final, slices).unwrap();
        match scheme.step(&s) {
            Err(Error::NonFiniteField { k: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
