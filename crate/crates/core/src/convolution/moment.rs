use crate::error::{Error, Result};
use crate::util::gauss_legendre;

/// `M2 = int_0^t int_{y_i >= 0} 4 y_i^2 / (4 nu s) G_nu(s, y) dy ds`.
///
/// The two transverse directions integrate to one; the half-line integral
/// is a trapezoid sum on `[0, 12 sqrt(2 nu s)]` (spectrally accurate for this
/// even integrand) and the time integral is Gauss-Legendre.
pub fn second_moment(nu: f64, t: f64, axis: usize) -> Result<f64> {
    if !(nu > 0.0 && t > 0.0) || !nu.is_finite() || !t.is_finite() {
        return Err(Error::KernelParams { nu, t });
    }
    if axis > 2 {
        return Err(Error::Parameter {
            name: "axis",
            value: axis as f64,
            reason: "half-space axis must be 0, 1 or 2",
        });
    }
    const NY: usize = 400;
    let inner = |s: f64| {
        let sigma = (2.0 * nu * s).sqrt();
        let dy = 12.0 * sigma / NY as f64;
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        (0..=NY)
            .map(|j| {
                let y = j as f64 * dy;
                let w = if j == 0 || j == NY { 0.5 } else { 1.0 };
                w * dy * 4.0 * y * y / (4.0 * nu * s) * norm * (-y * y / (2.0 * sigma * sigma)).exp()
            })
            .sum::<f64>()
    };
    Ok(gauss_legendre(16, 0.0, t).into_iter().map(|(s, w)| w * inner(s)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MultiIndex;
    use crate::kernels::{gauss_eval, HeatKernelSpec};

    #[test]
    fn matches_four_dimensional_brute_force() {
        let (nu, t) = (0.1, 0.05);
        let m2 = second_moment(nu, t, 0).unwrap();
        // Midpoint rule in time, trapezoid on a 3-D box in space.
        let (nt, ny) = (64, 48);
        let mut acc = 0.0;
        for a in 0..nt {
            let s = (a as f64 + 0.5) * t / nt as f64;
            let spec = HeatKernelSpec::new(nu, s, MultiIndex::ZERO).unwrap();
            let half = 7.0 * (2.0 * nu * s).sqrt();
            let dy = half / ny as f64;
            let mut space = 0.0;
            for i in 0..=ny {
                let y1 = i as f64 * dy;
                let wi = if i == 0 || i == ny { 0.5 } else { 1.0 };
                for j in -(ny as i64)..=ny as i64 {
                    let wj = if j.unsigned_abs() as usize == ny { 0.5 } else { 1.0 };
                    for k in -(ny as i64)..=ny as i64 {
                        let wk = if k.unsigned_abs() as usize == ny { 0.5 } else { 1.0 };
                        let y = [y1, j as f64 * dy, k as f64 * dy];
                        space += wi * wj * wk * 4.0 * y1 * y1 / (4.0 * nu * s) * gauss_eval(&spec, y);
                    }
                }
            }
            acc += space * dy * dy * dy * t / nt as f64;
        }
        assert!((m2 - acc).abs() < 1e-5, "{m2} {acc}");
        assert!((m2 - t).abs() < 1e-10);
    }

    #[test]
    fn grows_linearly_in_time() {
        let a = second_moment(0.05, 0.2, 1).unwrap();
        let b = second_moment(0.05, 0.6, 1).unwrap();
        assert!((b / a - 3.0).abs() < 1e-10);
        assert!(a > 0.0);
        assert!(second_moment(0.0, 1.0, 0).is_err());
        assert!(second_moment(0.1, 1.0, 3).is_err());
    }
}
