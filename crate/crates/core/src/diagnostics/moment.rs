use crate::convolution::{conv_spacetime, second_moment, ConvPath, TimeSlab};
use crate::error::{Error, Result};
use crate::field::{gradient, MultiIndex, ScalarField3, VectorField3};

/// Time nodes of the constant-in-time slab.
const N_T: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lipschitz: f64,
    pub m2: f64,
}

impl MomentCheck {
    /// `lhs <= rhs (1 + 1e-3)`, with a rounding floor of `1e-12` so that
    /// constant data (`L = 0`) pass.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-3) + 1e-12
    }

    /// `rhs / lhs`, infinite when `lhs = 0`.
    pub fn margin(&self) -> f64 {
        if self.lhs == 0.0 {
            f64::INFINITY
        } else {
            self.rhs / self.lhs
        }
    }
}

/// Largest Euclidean norm of the finite-difference gradient over the grid.
pub fn measured_lipschitz(f: &ScalarField3) -> f64 {
    let g = gradient(f);
    (0..f.grid().len())
        .map(|i| {
            let c = g.components();
            (c[0].values()[i].powi(2) + c[1].values()[i].powi(2) + c[2].values()[i].powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}

/// `lhs = ||int_0^t d_i G_nu(t - s) * F ds||_C0` against `rhs = 4 L M2(nu, t)`.
///
/// The sup is taken over nodes farther than the kernel reach from every
/// face: zero extension of `F` beyond the box is not Lipschitz with
/// constant `L`.
pub fn moment_bound_check(f: &ScalarField3, lipschitz: Option<f64>, nu: f64, t: f64, axis: usize) -> Result<MomentCheck> {
    let m2 = second_moment(nu, t, axis)?;
    let grid = *f.grid();
    let reach = 8.9 * (2.0 * nu * t).sqrt() + grid.h();
    let inner = grid.extent() - reach;
    if inner <= 0.0 {
        return Err(Error::Parameter {
            name: "t",
            value: t,
            reason: "heat kernel reach covers the whole box",
        });
    }
    let l = lipschitz.unwrap_or_else(|| measured_lipschitz(f));
    let mut comps = VectorField3::zeros(grid).into_components();
    comps[0] = f.clone();
    let slab = TimeSlab::constant(&VectorField3::new(comps)?, 0.0, t, N_T)?;
    let out = conv_spacetime(&slab, nu, t, MultiIndex::unit(axis), ConvPath::FastSeparable)?;
    let lhs = out
        .component(0)
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.point(*i).iter().all(|x| x.abs() <= inner))
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    Ok(MomentCheck {
        lhs,
        rhs: 4.0 * l * m2,
        lipschitz: l,
        m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(4.0, 33).unwrap()
    }

    #[test]
    fn constant_field_gives_zero() {
        let f = ScalarField3::from_fn(grid(), |_| 2.5);
        let c = moment_bound_check(&f, None, 0.1, 0.5, 1).unwrap();
        assert!(c.lhs < 1e-12 && c.lipschitz < 1e-12 && c.holds());
    }

    #[test]
    fn linear_field_gives_t() {
        for axis in 0..3 {
            let f = ScalarField3::from_fn(grid(), |p| p[axis]);
            let t = 0.5;
            let c = moment_bound_check(&f, Some(1.0), 0.1, t, axis).unwrap();
            assert!((c.lhs - t).abs() < 1e-3 * t, "{c:?}");
            assert!((c.m2 - t).abs() < 1e-9);
            assert!(c.holds());
        }
    }

    #[test]
    fn measured_constant_of_a_linear_field() {
        let f = ScalarField3::from_fn(grid(), |p| 3.0 * p[0] - 4.0 * p[2]);
        assert!((measured_lipschitz(&f) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_larger_than_box_is_rejected() {
        let f = ScalarField3::from_fn(grid(), |p| p[0]);
        assert!(moment_bound_check(&f, None, 1.0, 1.0, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn cone_fields_satisfy_the_bound(
            cx in -1.0f64..1.0, cy in -1.0f64..1.0, cz in -1.0f64..1.0,
            a in 0.1f64..3.0, axis in 0usize..3, nu in 0.02f64..0.2,
        ) {
            let g = Grid::new(4.0, 25).unwrap();
            let f = ScalarField3::from_fn(g, |p| {
                let r = ((p[0] - cx).powi(2) + (p[1] - cy).powi(2) + (p[2] - cz).powi(2)).sqrt();
                a * r.min(1.0)
            });
            let c = moment_bound_check(&f, Some(a), nu, 0.3, axis).unwrap();
            prop_assert!(c.holds(), "{:?}", c);
        }
    }
}
