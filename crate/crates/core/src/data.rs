//! Singular and kink initial data: the radial profile `g_(k)`, the smooth
//! cutoff `phi_1`, velocity data with one singular component, and vorticity
//! data.

use crate::convolution::leray_project;
use crate::error::{Error, Result};
use crate::field::{curl, Grid, ScalarField3, VectorField3};
use crate::util::{fit_loglog, Jet2, LineFit};

fn bump(u: Jet2) -> Jet2 {
    if u.v > 0.0 {
        (-u.recip()).exp()
    } else {
        Jet2::constant(0.0)
    }
}

/// `phi_1` as a jet: 1 on `r <= 1`, 0 on `r >= 2`, and
/// `s(2-r) / (s(2-r) + s(r-1))` with `s(u) = exp(-1/u)` in between.
pub fn cutoff_jet(r: Jet2) -> Jet2 {
    if r.v <= 1.0 {
        Jet2::constant(1.0)
    } else if r.v >= 2.0 {
        Jet2::constant(0.0)
    } else {
        let a = bump(Jet2::constant(2.0) - r);
        let b = bump(r - Jet2::constant(1.0));
        a / (a + b)
    }
}

pub fn cutoff_phi1(r: f64) -> f64 {
    cutoff_jet(Jet2::variable(r)).v
}

/// Parameters `(k, alpha0, beta0)` of `g_(k)(r) = phi_1(r) r^beta0 sin(r^{-(1+alpha0)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    pub k: u32,
    pub alpha0: f64,
    pub beta0: f64,
}

impl ProfileParams {
    pub const DEFAULT: ProfileParams = ProfileParams {
        k: 0,
        alpha0: 0.25,
        beta0: 2.2,
    };

    /// Validates `alpha0 in (0, 1/2)` and `k != 1`. A `beta0` outside its
    /// admissible interval is accepted with a logged warning.
    pub fn new(k: u32, alpha0: f64, beta0: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 < 0.5) {
            return Err(Error::Parameter {
                name: "alpha0",
                value: alpha0,
                reason: "must lie in (0, 1/2)",
            });
        }
        if k == 1 {
            return Err(Error::Parameter {
                name: "k",
                value: 1.0,
                reason: "kink data are defined for k = 0 and k >= 2",
            });
        }
        if !beta0.is_finite() || beta0 <= 0.0 {
            return Err(Error::Parameter {
                name: "beta0",
                value: beta0,
                reason: "must be positive",
            });
        }
        let p = Self { k, alpha0, beta0 };
        if !p.beta_in_interval() {
            let (lo, hi) = p.beta_interval();
            log::warn!("beta0 = {beta0} outside the admissible interval ({lo}, {hi}) for k = {k}");
        }
        Ok(p)
    }

    /// `(2, 2 + alpha0)` for `k = 0`, `(k + 1, k + 1 + alpha0)` otherwise.
    pub fn beta_interval(&self) -> (f64, f64) {
        let lo = if self.k == 0 { 2.0 } else { self.k as f64 + 1.0 };
        (lo, lo + self.alpha0)
    }

    pub fn beta_in_interval(&self) -> bool {
        let (lo, hi) = self.beta_interval();
        self.beta0 > lo && self.beta0 < hi
    }

    /// Exponent of the dominant singular term of `g'`: `beta0 - 2 - alpha0`.
    pub fn first_derivative_exponent(&self) -> f64 {
        self.beta0 - 2.0 - self.alpha0
    }

    /// Exponent of the dominant singular term of `g''`: `beta0 - 4 - 2 alpha0`.
    pub fn second_derivative_exponent(&self) -> f64 {
        self.beta0 - 4.0 - 2.0 * self.alpha0
    }

    /// Smallest `m` with `beta0 - m (2 + alpha0) < 0`; the profile is
    /// `C^{m-1}` but not `C^m` at the origin.
    pub fn kink_order(&self) -> u32 {
        let mut m = 0;
        while self.beta0 - m as f64 * (2.0 + self.alpha0) >= 0.0 {
            m += 1;
        }
        m
    }
}

/// Univariate radial profile used for the singular velocity component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProfile {
    /// `phi_1(r) r^beta0 sin(1 / r^{1 + alpha0})`.
    Singular(ProfileParams),
    /// Smooth surrogate `amplitude * r^2 exp(-r^2)`.
    Smooth { amplitude: f64 },
    Zero,
}

impl RadialProfile {
    pub fn singular_default() -> Self {
        RadialProfile::Singular(ProfileParams::DEFAULT)
    }

    pub fn smooth() -> Self {
        RadialProfile::Smooth { amplitude: 1.0 }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, RadialProfile::Singular(_))
    }

    /// Profile and its first two radial derivatives at `r > 0`.
    pub fn jet(&self, r: f64) -> Jet2 {
        let x = Jet2::variable(r);
        match *self {
            RadialProfile::Zero => Jet2::constant(0.0),
            RadialProfile::Smooth { amplitude } => (x * x * (-(x * x)).exp()) * amplitude,
            RadialProfile::Singular(p) => {
                if r >= 2.0 {
                    return Jet2::constant(0.0);
                }
                let core = x.powf(p.beta0) * x.powf(-(1.0 + p.alpha0)).sin();
                core * cutoff_jet(x)
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.jet(r).v
        }
    }
}

/// `g`, `g'` or `g''` at radius `r`; derivatives are rejected at `r = 0`
/// for every profile, where the singular family blows up.
pub fn g_profile(p: &RadialProfile, r: f64, deriv: usize) -> Result<f64> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::Parameter {
            name: "r",
            value: r,
            reason: "radius must be finite and nonnegative",
        });
    }
    match deriv {
        0 => Ok(p.value(r)),
        1 | 2 if r == 0.0 => Err(Error::SingularAtOrigin(deriv)),
        1 => Ok(p.jet(r).d1),
        2 => Ok(p.jet(r).d2),
        _ => Err(Error::DerivativeOrder(deriv)),
    }
}

/// How the components other than `i0` are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionMode {
    /// Leray projection of `g e_{i0}`; divergence-free to discretization accuracy.
    ProjectedDivFree,
    /// Other components zero; divergence is reported, not enforced.
    PaperLiteralSingleComponent,
}

impl CompletionMode {
    pub fn label(&self) -> &'static str {
        match self {
            CompletionMode::ProjectedDivFree => "projected",
            CompletionMode::PaperLiteralSingleComponent => "literal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataSpec {
    /// Singular component, 0-based (`i0 - 1` in one-based notation).
    pub axis: usize,
    pub mode: CompletionMode,
    pub profile: RadialProfile,
}

impl DataSpec {
    pub fn new(axis: usize, mode: CompletionMode, profile: RadialProfile) -> Result<Self> {
        if axis > 2 {
            return Err(Error::Parameter {
                name: "i0",
                value: axis as f64 + 1.0,
                reason: "singular component index must be 1, 2 or 3",
            });
        }
        Ok(Self {
            axis,
            mode,
            profile,
        })
    }
}

/// Velocity data `v^f` sampled on `grid`.
pub fn build_velocity_data(spec: &DataSpec, grid: &Grid) -> VectorField3 {
    let profile = spec.profile;
    let g = ScalarField3::from_fn(*grid, |p| {
        profile.value((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
    });
    let mut v = VectorField3::zeros(*grid);
    *v.component_mut(spec.axis) = g;
    match spec.mode {
        CompletionMode::PaperLiteralSingleComponent => v,
        CompletionMode::ProjectedDivFree => leray_project(&v),
    }
}

/// Vorticity data `omega^f = curl v^f`.
pub fn build_vorticity_data(v_f: &VectorField3) -> VectorField3 {
    curl(v_f)
}

/// Which radial derivative [`singularity_order_probe`] examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeQuantity {
    FirstDerivative,
    SecondDerivative,
}

/// Measured power-law exponent of `|g'|` or `|g''|` as `r -> 0`.
///
/// Singular profiles are sampled on `[1e-4, 1e-1]` at the extrema of the
/// oscillating factor carrying the dominant term (cosine extrema for `g'`,
/// sine extrema for `g''`); smooth profiles on log-spaced radii.
pub fn singularity_order_probe(p: &RadialProfile, quantity: ProbeQuantity) -> Result<LineFit> {
    const R_LO: f64 = 1e-4;
    const R_HI: f64 = 1e-1;
    let radii: Vec<f64> = match p {
        RadialProfile::Singular(pp) => {
            let e = 1.0 + pp.alpha0;
            let phase = match quantity {
                ProbeQuantity::FirstDerivative => 0.0,
                ProbeQuantity::SecondDerivative => 0.5,
            };
            // 1 / r^{1+alpha0} = (m + phase) pi, log-thinned to a few hundred points.
            let m_lo = (R_HI.powf(-e) / std::f64::consts::PI - phase).ceil().max(1.0);
            let m_hi = (R_LO.powf(-e) / std::f64::consts::PI - phase).floor();
            if m_hi < m_lo + 7.0 {
                return Err(Error::FitFailure(format!(
                    "only {} extrema in [{R_LO}, {R_HI}]",
                    (m_hi - m_lo + 1.0).max(0.0)
                )));
            }
            let count = 256usize;
            let mut ms: Vec<f64> = (0..count)
                .map(|i| (m_lo.ln() + (m_hi.ln() - m_lo.ln()) * i as f64 / (count - 1) as f64).exp().round())
                .collect();
            ms.dedup();
            ms.iter()
                .map(|m| ((m + phase) * std::f64::consts::PI).powf(-1.0 / e))
                .collect()
        }
        _ => (0..64)
            .map(|i| (R_LO.ln() + (R_HI.ln() - R_LO.ln()) * i as f64 / 63.0).exp())
            .collect(),
    };
    if radii.len() < 8 {
        return Err(Error::FitFailure("fewer than 8 sample radii".into()));
    }
    let deriv = match quantity {
        ProbeQuantity::FirstDerivative => 1,
        ProbeQuantity::SecondDerivative => 2,
    };
    let vals = radii
        .iter()
        .map(|&r| g_profile(p, r, deriv).map(f64::abs))
        .collect::<Result<Vec<_>>>()?;
    fit_loglog(&radii, &vals)
}
