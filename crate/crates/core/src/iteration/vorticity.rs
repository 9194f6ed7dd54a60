use rayon::prelude::*;

use super::{IterationTrace, PicardScheme};
use crate::convolution::TimeSlab;
use crate::error::{Error, Result};
use crate::field::{partial, ScalarField3, VectorField3};

/// `sum_j v_j d_j w_i - sum_j (d_j v_i + d_i v_j) w_j / 2`: transport of `w`
/// by `v` minus stretching by the symmetric part of `grad v`.
pub fn transport_stretching(v: &VectorField3, w: &VectorField3) -> VectorField3 {
    let g = *v.grid();
    let dv: Vec<Vec<ScalarField3>> = (0..3)
        .map(|i| (0..3).map(|j| partial(v.component(i), j)).collect())
        .collect();
    VectorField3::new(std::array::from_fn(|i| {
        let mut acc = ScalarField3::zeros(g);
        for j in 0..3 {
            acc.axpy(1.0, &v.component(j).mul(&partial(w.component(i), j)));
            let sym = dv[i][j].add(&dv[j][i]);
            acc.axpy(-0.5, &sym.mul(w.component(j)));
        }
        acc
    }))
    .expect("same grid")
}

/// `omega^k = omega^f *_sp G + (s_B A(v^{k-1}, omega^{k-1}) + curl F) * G`,
/// with `A` from [`transport_stretching`].
pub fn vorticity_step(scheme: &PicardScheme, w_prev: &TimeSlab, v_prev: &TimeSlab, k: usize) -> Result<TimeSlab> {
    w_prev.check_aligned(v_prev)?;
    let base = scheme
        .omega_base()
        .ok_or_else(|| Error::InsufficientSlices("vorticity tracking is off".into()))?;
    let s_b = scheme.config().signs.burgers();
    let src: Vec<VectorField3> = (0..w_prev.len())
        .into_par_iter()
        .map(|m| {
            let mut s = transport_stretching(v_prev.slice(m), w_prev.slice(m)).scaled(s_b);
            if let Some(fc) = scheme.forcing_curl(m) {
                s.axpy(1.0, &fc);
            }
            s
        })
        .collect();
    let src = TimeSlab::new(w_prev.t0(), w_prev.t1(), src)?;
    scheme.add_base(base, scheme.duhamel(&src)?, k)
}

/// For each stored `k >= 3`, the sup over slices and nodes of
/// `(omega^k - omega^{k-1}) - R_k`, where
///
/// `R_k = s_B [A(dv^{k-1}, omega^{k-1}) + A(v^{k-2}, domega^{k-1})] * G`
///
/// is the increment recursion implied by bilinearity of `A`.
pub fn vorticity_increment_recursion(trace: &IterationTrace) -> Result<Vec<(usize, f64)>> {
    let scheme = trace.scheme();
    let s_b = scheme.config().signs.burgers();
    let mut out = Vec::new();
    for k in 3..=trace.last_k() {
        let (Some(a), Some(b), Some(c)) = (trace.state(k), trace.state(k - 1), trace.state(k - 2)) else {
            continue;
        };
        let (Some(wk), Some(w1), Some(w2)) = (&a.omega, &b.omega, &c.omega) else {
            continue;
        };
        let dv = b.v.sub(&c.v)?;
        let dw = w1.sub(w2)?;
        let src: Vec<VectorField3> = (0..dv.len())
            .into_par_iter()
            .map(|m| {
                let mut s = transport_stretching(dv.slice(m), w1.slice(m));
                s.axpy(1.0, &transport_stretching(c.v.slice(m), dw.slice(m)));
                s.scaled(s_b)
            })
            .collect();
        let rhs = scheme.duhamel(&TimeSlab::new(dv.t0(), dv.t1(), src)?)?;
        let direct = wk.sub(w1)?;
        let res = direct
            .slices()
            .iter()
            .zip(&rhs)
            .map(|(d, r)| d.sub(r).max_abs())
            .fold(0.0, f64::max);
        out.push((k, res));
    }
    Ok(out)
}
