//! Closed-form kernels: the heat Gaussian and its derivatives, the
//! Biot-Savart kernel and the Newtonian potential with gradient and Hessian.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::MultiIndex;
use crate::util::golden_section_max;

/// Points closer to the origin than this are rejected by singular kernels.
pub const SINGULAR_GUARD: f64 = 1e-12;

/// Heat kernel `G_nu(t, x)` with a derivative multi-index of order at most 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelSpec {
    nu: f64,
    t: f64,
    gamma: MultiIndex,
}

impl HeatKernelSpec {
    pub fn new(nu: f64, t: f64, gamma: MultiIndex) -> Result<Self> {
        if !(nu > 0.0) || !(t > 0.0) || !nu.is_finite() || !t.is_finite() {
            return Err(Error::KernelParams { nu, t });
        }
        if gamma.order() > 2 {
            return Err(Error::DerivativeOrder(gamma.order()));
        }
        Ok(Self { nu, t, gamma })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn gamma(&self) -> MultiIndex {
        self.gamma
    }
}

/// Polynomial factor `H_{gamma, nu t}` with `D^gamma G = H G`; a product of
/// one 1-D polynomial per axis, stored as ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteFactor {
    axes: [Vec<f64>; 3],
}

impl HermiteFactor {
    pub fn new(gamma: MultiIndex, nu_t: f64) -> Self {
        let a = 1.0 / (2.0 * nu_t);
        let poly = |d: u8| match d {
            0 => vec![1.0],
            1 => vec![0.0, -a],
            2 => vec![-a, 0.0, a * a],
            _ => unreachable!("heat kernel derivatives are limited to order 2"),
        };
        Self {
            axes: [poly(gamma.0[0]), poly(gamma.0[1]), poly(gamma.0[2])],
        }
    }

    pub fn degree(&self) -> usize {
        self.axes.iter().map(|p| p.len() - 1).sum()
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.axes
            .iter()
            .zip(x)
            .map(|(p, xa)| p.iter().rev().fold(0.0, |acc, c| acc * xa + c))
            .product()
    }
}

/// `D^gamma G_nu(t, x)` with `G_nu = (4 pi nu t)^{-3/2} exp(-|x|^2 / (4 nu t))`.
pub fn gauss_eval(spec: &HeatKernelSpec, x: [f64; 3]) -> f64 {
    let nt = spec.nu * spec.t;
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let g = (4.0 * PI * nt).powf(-1.5) * (-r2 / (4.0 * nt)).exp();
    if spec.gamma.order() == 0 {
        g
    } else {
        HermiteFactor::new(spec.gamma, nt).eval(x) * g
    }
}

/// Values of a first-order derivative kernel at `x` and at `x` with
/// coordinate `i` flipped; the two are negatives of each other.
pub fn gauss_antisymmetry_pair(spec: &HeatKernelSpec, x: [f64; 3]) -> Result<(f64, f64)> {
    let axis = spec.gamma.axis().ok_or(Error::Parameter {
        name: "gamma order",
        value: spec.gamma.order() as f64,
        reason: "antisymmetry pair needs a first-order derivative",
    })?;
    let mut flipped = x;
    flipped[axis] = -flipped[axis];
    Ok((gauss_eval(spec, x), gauss_eval(spec, flipped)))
}

/// `sup_{z > 0} z^{3/2 + order - delta} exp(-z^2 / 4)` for one `delta`.
pub fn profile_sup(order: usize, delta: f64) -> f64 {
    let p = 1.5 + order as f64 - delta;
    let f = |z: f64| z.powf(p) * (-z * z / 4.0).exp();
    // Maximizer is sqrt(2p) <= sqrt(2 * 3.5 + 1); bracket generously.
    golden_section_max(f, 1e-9, 20.0, 1e-10).1
}

/// `C_order = sup_{z > 0, delta in (0,1)} z^{3/2 + order - delta} exp(-z^2/4)`,
/// computed once by nested golden-section search.
pub fn gauss_bound_constant(order: usize) -> f64 {
    static CACHE: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!(order <= 2, "bound constants exist for orders 0..=2");
    *CACHE[order].get_or_init(|| {
        let (_, best) = golden_section_max(|d| profile_sup(order, d), 0.0, 1.0, 1e-10);
        // The supremum is approached at the delta -> 0 end of the open interval.
        best.max(profile_sup(order, 0.0))
    })
}

/// Pointwise bound `C_{|gamma|} / (nu^delta t^delta r^{3 + |gamma| - 2 delta})`.
pub fn gauss_derivative_bound(order: usize, delta: f64, nu: f64, t: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::SingularPoint(r));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter {
            name: "delta",
            value: delta,
            reason: "must lie in (0, 1)",
        });
    }
    if !(nu > 0.0) || !(t > 0.0) {
        return Err(Error::KernelParams { nu, t });
    }
    if order > 2 {
        return Err(Error::DerivativeOrder(order));
    }
    let c = gauss_bound_constant(order);
    Ok(c / ((nu * t).powf(delta) * r.powf(3.0 + order as f64 - 2.0 * delta)))
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn guard(x: [f64; 3]) -> Result<f64> {
    let r = norm(x);
    if r < SINGULAR_GUARD {
        Err(Error::SingularPoint(r))
    } else {
        Ok(r)
    }
}

/// Biot-Savart kernel applied to `h`: `(x × h) / (4 pi |x|^3)`.
pub fn biot_savart_apply(x: [f64; 3], h: [f64; 3]) -> Result<[f64; 3]> {
    let r = guard(x)?;
    let s = 1.0 / (4.0 * PI * r * r * r);
    Ok([
        s * (x[1] * h[2] - x[2] * h[1]),
        s * (x[2] * h[0] - x[0] * h[2]),
        s * (x[0] * h[1] - x[1] * h[0]),
    ])
}

/// Derivative order requested from [`newtonian_kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonianOrder {
    Potential,
    Gradient,
    Hessian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NewtonianValue {
    Scalar(f64),
    Vector([f64; 3]),
    Matrix([[f64; 3]; 3]),
}

/// Fundamental solution of the Laplacian with `ΔK = δ`: `K = -1/(4 pi |x|)`.
pub fn newtonian_potential(x: [f64; 3]) -> Result<f64> {
    Ok(-1.0 / (4.0 * PI * guard(x)?))
}

/// `∇K = x / (4 pi |x|^3)`.
pub fn newtonian_gradient(x: [f64; 3]) -> Result<[f64; 3]> {
    let r = guard(x)?;
    let s = 1.0 / (4.0 * PI * r * r * r);
    Ok([s * x[0], s * x[1], s * x[2]])
}

/// `∂_i ∂_j K = (δ_ij |x|^2 - 3 x_i x_j) / (4 pi |x|^5)`.
pub fn newtonian_hessian(x: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    let r = guard(x)?;
    let r2 = r * r;
    let s = 1.0 / (4.0 * PI * r2 * r2 * r);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let d = if i == j { r2 } else { 0.0 };
            m[i][j] = s * (d - 3.0 * x[i] * x[j]);
        }
    }
    Ok(m)
}

pub fn newtonian_kernel(x: [f64; 3], order: NewtonianOrder) -> Result<NewtonianValue> {
    Ok(match order {
        NewtonianOrder::Potential => NewtonianValue::Scalar(newtonian_potential(x)?),
        NewtonianOrder::Gradient => NewtonianValue::Vector(newtonian_gradient(x)?),
        NewtonianOrder::Hessian => NewtonianValue::Matrix(newtonian_hessian(x)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(nu: f64, t: f64, g: [u8; 3]) -> HeatKernelSpec {
        HeatKernelSpec::new(nu, t, MultiIndex(g)).unwrap()
    }

    #[test]
    fn gaussian_peak_value() {
        let v = gauss_eval(&spec(1.0, 1.0, [0, 0, 0]), [0.0; 3]);
        assert!((v - (4.0 * PI).powf(-1.5)).abs() < 1e-16);
        assert!((v - 0.022446).abs() < 5e-6);
        assert_eq!(gauss_eval(&spec(1.0, 1.0, [1, 0, 0]), [0.0; 3]), 0.0);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(HeatKernelSpec::new(0.0, 1.0, MultiIndex::ZERO).is_err());
        assert!(HeatKernelSpec::new(1.0, -0.5, MultiIndex::ZERO).is_err());
        assert!(HeatKernelSpec::new(1.0, 1.0, MultiIndex::new(2, 1, 0)).is_err());
    }

    #[test]
    fn first_derivative_carries_the_linear_factor() {
        let (nu, t) = (0.3, 0.7);
        let x = [0.4, -0.2, 0.9];
        let g0 = gauss_eval(&spec(nu, t, [0, 0, 0]), x);
        let g1 = gauss_eval(&spec(nu, t, [0, 1, 0]), x);
        assert!((g1 - (-2.0 * x[1] / (4.0 * nu * t)) * g0).abs() < 1e-16);
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let (nu, t) = (0.2, 0.9);
        let x = [0.3, 0.5, -0.4];
        let f = |p: [f64; 3]| gauss_eval(&spec(nu, t, [0, 0, 0]), p);
        let e = 1e-4;
        let mut xp = x;
        xp[0] += e;
        let mut xm = x;
        xm[0] -= e;
        let fd = (f(xp) - 2.0 * f(x) + f(xm)) / (e * e);
        assert!((gauss_eval(&spec(nu, t, [2, 0, 0]), x) - fd).abs() < 1e-6);
        let shift = |dx: f64, dy: f64| f([x[0] + dx, x[1] + dy, x[2]]);
        let fd_xy = (shift(e, e) - shift(e, -e) - shift(-e, e) + shift(-e, -e)) / (4.0 * e * e);
        assert!((gauss_eval(&spec(nu, t, [1, 1, 0]), x) - fd_xy).abs() < 1e-6);
        assert_eq!(HermiteFactor::new(MultiIndex::new(1, 1, 0), nu * t).degree(), 2);
    }

    #[test]
    fn antisymmetry_pairs() {
        let (a, b) = gauss_antisymmetry_pair(&spec(1.0, 1.0, [1, 0, 0]), [1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a + b, 0.0);
        let (a, b) = gauss_antisymmetry_pair(&spec(0.5, 2.0, [0, 1, 0]), [0.7, 0.0, -1.0]).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        assert!(gauss_antisymmetry_pair(&spec(1.0, 1.0, [0, 0, 0]), [1.0; 3]).is_err());
    }

    #[test]
    fn golden_section_constant_matches_closed_form() {
        // For fixed delta the maximizer is z^2 = 3 - 2 delta.
        for delta in [0.1f64, 0.5, 0.75, 0.999_999] {
            let p = 1.5 - delta;
            let z = (2.0 * p).sqrt();
            let exact = z.powf(p) * (-z * z / 4.0).exp();
            assert!((profile_sup(0, delta) - exact).abs() < 1e-12);
        }
        assert!((profile_sup(0, 1.0) - (-0.25f64).exp()).abs() < 1e-12);
        assert!((profile_sup(0, 1.0) - 0.7788).abs() < 1e-4);
        let c0 = gauss_bound_constant(0);
        assert!((c0 - (3.0 / std::f64::consts::E).powf(0.75)).abs() < 1e-9);
        assert!(gauss_bound_constant(1) > c0);
    }

    #[test]
    fn bound_dominates_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let nu = 10f64.powf(rng.gen_range(-3.0..1.0));
            let t = 10f64.powf(rng.gen_range(-3.0..1.0));
            let r = 10f64.powf(rng.gen_range(-3.0..1.0));
            let dir = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)];
            let len = norm(dir).max(1e-3);
            let x = dir.map(|c| c / len * r);
            let r = norm(x);
            for (order, g) in [(0, [0, 0, 0]), (1, [0, 0, 1]), (2, [1, 1, 0]), (2, [0, 2, 0])] {
                let val = gauss_eval(&spec(nu, t, g), x).abs();
                let bound = gauss_derivative_bound(order, 0.75, nu, t, r).unwrap();
                assert!(val <= bound, "order {order} nu {nu} t {t} r {r}: {val} > {bound}");
            }
        }
    }

    #[test]
    fn bound_decays_monotonically_in_r() {
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let r = 0.01 * 1.3f64.powi(k);
            let b = gauss_derivative_bound(1, 0.6, 0.1, 0.5, r).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-4);
        assert!(gauss_derivative_bound(0, 0.5, 0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn biot_savart_examples() {
        let v = biot_savart_apply([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.0);
        assert!((v[2] - 1.0 / (4.0 * PI)).abs() < 1e-17);
        assert!((v[2] - 0.0795775).abs() < 1e-7);
        assert_eq!(biot_savart_apply([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]).unwrap(), [0.0; 3]);
        let x = [0.3, -1.1, 0.4];
        let h = [0.2, 0.5, -0.9];
        let a = norm(biot_savart_apply(x, h).unwrap());
        let b = norm(biot_savart_apply(x.map(|c| 2.0 * c), h).unwrap());
        assert!((b - a / 4.0).abs() < 1e-15);
        assert!(biot_savart_apply([0.0; 3], h).is_err());
    }

    #[test]
    fn biot_savart_output_is_orthogonal_to_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let h: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let v = biot_savart_apply(x, h).unwrap();
            let dot = v[0] * x[0] + v[1] * x[1] + v[2] * x[2];
            assert!(dot.abs() < 1e-14 * norm(v).max(1.0) * norm(x));
        }
    }

    #[test]
    fn newtonian_examples() {
        let x = [1.0, 0.0, 0.0];
        assert!((newtonian_potential(x).unwrap() + 1.0 / (4.0 * PI)).abs() < 1e-17);
        assert!((newtonian_potential(x).unwrap() + 0.0795775).abs() < 1e-7);
        assert_eq!(newtonian_gradient(x).unwrap(), [1.0 / (4.0 * PI), 0.0, 0.0]);
        assert!(matches!(
            newtonian_kernel([0.0; 3], NewtonianOrder::Hessian),
            Err(Error::SingularPoint(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let x: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let hs = newtonian_hessian(x).unwrap();
            let tr = hs[0][0] + hs[1][1] + hs[2][2];
            assert!(tr.abs() < 1e-12 * hs[0][0].abs().max(1.0));
            let gr = norm(newtonian_gradient(x).unwrap());
            assert!((gr * norm(x).powi(2) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        }
    }
}
