use rayon::prelude::*;

use crate::data::{DataSpec, RadialProfile};
use crate::error::{Error, Result};
use crate::util::{fit_loglog, LineFit};

/// Probe-ball radius in cells.
pub const PROBE_CELLS: i64 = 8;

/// A fitted exponent above `-BOUNDED_TOL` counts as a bounded sup.
pub const BOUNDED_TOL: f64 = 0.02;

/// Refinement ladder of half-cell-shifted grids on `[-R, R]^3`: level `l` has
/// `h_l = 2R / (n0 - 1) / 2^l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub extent: f64,
    pub n0: usize,
    pub levels: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            extent: 2.0,
            n0: 257,
            levels: 3,
        }
    }
}

impl Refinement {
    pub fn spacings(&self) -> Vec<f64> {
        let h0 = 2.0 * self.extent / (self.n0 - 1) as f64;
        (0..self.levels).map(|l| h0 / f64::powi(2.0, l as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub h: Vec<f64>,
    pub sup: Vec<f64>,
    pub fit: LineFit,
}

impl ExponentFit {
    /// `e` in `sup ~ h^e`, clamped at 0: a sup that stays bounded or decays
    /// has growth exponent 0.
    pub fn growth_exponent(&self) -> f64 {
        self.fit.slope.min(0.0)
    }

    pub fn bounded(&self) -> bool {
        self.fit.slope > -BOUNDED_TOL
    }
}

/// Max of `f` over the nodes of the level-`h` grid inside the ball of
/// radius `PROBE_CELLS * h` about the origin. Grid nodes sit at
/// `(m + 1/2) h`, so only the ball's own nodes are visited.
fn ball_sup<F: Fn([f64; 3], f64) -> f64 + Sync>(h: f64, f: F) -> f64 {
    let c = PROBE_CELLS;
    let rmax = c as f64 * h;
    (-c..c)
        .into_par_iter()
        .map(|a| {
            let mut best: f64 = 0.0;
            for b in -c..c {
                for d in -c..c {
                    let p = [(a as f64 + 0.5) * h, (b as f64 + 0.5) * h, (d as f64 + 0.5) * h];
                    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    if r <= rmax {
                        best = best.max(f(p, r));
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

fn fit_levels<F: Fn([f64; 3], f64) -> f64 + Sync>(levels: &Refinement, f: F) -> Result<ExponentFit> {
    if levels.levels < 3 {
        return Err(Error::FitFailure(format!(
            "exponent fits need at least 3 refinement levels, got {}",
            levels.levels
        )));
    }
    let h = levels.spacings();
    let sup: Vec<f64> = h.iter().map(|&h| ball_sup(h, &f)).collect();
    if sup.iter().all(|&s| s == 0.0) {
        // Identically zero data: bounded, exponent 0.
        return Ok(ExponentFit {
            fit: LineFit {
                slope: 0.0,
                intercept: f64::NEG_INFINITY,
                residual: 0.0,
            },
            h,
            sup,
        });
    }
    let fit = fit_loglog(&h, &sup)?;
    Ok(ExponentFit { h, sup, fit })
}

/// Growth of `sup |omega^f|` near the origin under refinement. The vorticity
/// of `g(r) e_{i0}` is `g'(r) (x / r) x e_{i0}`, with modulus
/// `|g'(r)| sqrt(1 - (x_{i0} / r)^2)`; it is evaluated in closed form because
/// the oscillation of the singular family is unresolved on every grid.
pub fn blowup_indicator(spec: &DataSpec, levels: &Refinement) -> Result<ExponentFit> {
    let profile = spec.profile;
    let axis = spec.axis;
    fit_levels(levels, move |p, r| {
        let s = (1.0 - (p[axis] / r).powi(2)).max(0.0).sqrt();
        profile.jet(r).d1.abs() * s
    })
}

/// Fitted growth of `sup |g^{(m)}|` over the probe balls for `m = 1, 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct KinkReport {
    pub derivatives: Vec<(usize, ExponentFit)>,
}

impl KinkReport {
    /// Largest probed `m` whose `m`-th derivative stays bounded (0 if even
    /// the first one grows).
    pub fn largest_bounded(&self) -> usize {
        self.derivatives
            .iter()
            .take_while(|(_, f)| f.bounded())
            .last()
            .map_or(0, |(m, _)| *m)
    }

    /// `m + 1` for the largest bounded order `m`; `None` when every probed
    /// derivative is bounded.
    pub fn kink_order(&self) -> Option<usize> {
        let m = self.largest_bounded();
        (m < self.derivatives.len()).then_some(m + 1)
    }
}

pub fn kink_order_probe(profile: &RadialProfile, levels: &Refinement) -> Result<KinkReport> {
    let derivatives = (1..=2)
        .map(|m| {
            let fit = fit_levels(levels, |_, r| {
                let j = profile.jet(r);
                if m == 1 {
                    j.d1.abs()
                } else {
                    j.d2.abs()
                }
            })?;
            Ok((m, fit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KinkReport { derivatives })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CompletionMode, ProfileParams};

    fn spec(p: RadialProfile) -> DataSpec {
        DataSpec::new(1, CompletionMode::PaperLiteralSingleComponent, p).unwrap()
    }

    #[test]
    fn default_singular_data_grow_like_the_derivative_exponent() {
        let p = ProfileParams::DEFAULT;
        let f = blowup_indicator(&spec(RadialProfile::Singular(p)), &Refinement::default()).unwrap();
        let e = f.growth_exponent();
        assert!((e - p.first_derivative_exponent()).abs() < 0.03, "{e} {:?}", f.sup);
    }

    #[test]
    fn lipschitz_boundary_stays_bounded() {
        let p = ProfileParams::new(0, 0.25, 2.25).unwrap();
        let f = blowup_indicator(&spec(RadialProfile::Singular(p)), &Refinement::default()).unwrap();
        assert!(f.growth_exponent().abs() <= 0.01, "{:?}", f);
    }

    #[test]
    fn smooth_data_have_zero_exponent_and_no_kink() {
        for extent in [2.0, 3.0] {
            let lv = Refinement { extent, ..Refinement::default() };
            let f = blowup_indicator(&spec(RadialProfile::smooth()), &lv).unwrap();
            assert!(f.growth_exponent().abs() <= 0.01);
            assert_eq!(kink_order_probe(&RadialProfile::smooth(), &lv).unwrap().kink_order(), None);
        }
        let z = blowup_indicator(&spec(RadialProfile::Zero), &Refinement::default()).unwrap();
        assert_eq!(z.growth_exponent(), 0.0);
    }

    #[test]
    fn kink_order_matches_the_profile() {
        let p = ProfileParams::new(2, 0.25, 3.1).unwrap();
        let r = kink_order_probe(&RadialProfile::Singular(p), &Refinement::default()).unwrap();
        assert_eq!(r.kink_order(), Some(2));
        assert_eq!(r.kink_order(), Some(p.kink_order() as usize));
    }

    #[test]
    fn too_few_levels_is_a_fit_failure() {
        let lv = Refinement { levels: 2, ..Refinement::default() };
        assert!(matches!(
            blowup_indicator(&spec(RadialProfile::singular_default()), &lv),
            Err(Error::FitFailure(_))
        ));
    }
}
