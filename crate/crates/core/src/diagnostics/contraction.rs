use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{discrete_norm, fd_derivative, multi_indices_up_to, NormKind, NormOptions, VectorField3};
use crate::iteration::{run_picard, IterationConfig, IterationTrace, Quantity, Retention};

/// Norms below this are treated as zero when forming ratios.
pub const RATIO_GUARD: f64 = 1e-14;

/// `||dv^{k+1}|| / ||dv^k||` at one time node, or over the whole slab when
/// `t` is `None` (sup in time on both sides).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRatio {
    pub k: usize,
    pub t: Option<f64>,
    pub ratio: f64,
}

/// Per-node ratios for every stored `k` with a successor, followed by the
/// sup-in-time ratios. Pairs whose denominator is below [`RATIO_GUARD`] are
/// skipped, so zero data give an empty list.
pub fn contraction_ratios(trace: &IterationTrace, kind: NormKind, origin_excluded: bool) -> Vec<ContractionRatio> {
    let series = trace.series(Quantity::Increment, kind, origin_excluded);
    let mut out = Vec::new();
    for a in &series {
        if a.value < RATIO_GUARD {
            continue;
        }
        if let Some(b) = series.iter().find(|b| b.k == a.k + 1 && b.t == a.t) {
            out.push(ContractionRatio {
                k: a.k,
                t: Some(a.t),
                ratio: b.value / a.value,
            });
        }
    }
    out.extend(sup_ratios(trace, kind, origin_excluded));
    out
}

/// `sup_t ||dv^{k+1}(t)|| / sup_t ||dv^k(t)||`.
pub fn sup_ratios(trace: &IterationTrace, kind: NormKind, origin_excluded: bool) -> Vec<ContractionRatio> {
    let mut out = Vec::new();
    for k in 1..trace.last_k() {
        let (Some(a), Some(b)) = (
            trace.sup_over_time(k, Quantity::Increment, kind, origin_excluded),
            trace.sup_over_time(k + 1, Quantity::Increment, kind, origin_excluded),
        ) else {
            continue;
        };
        if a >= RATIO_GUARD {
            out.push(ContractionRatio { k, t: None, ratio: b / a });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub k: usize,
    pub t: f64,
    /// Derivative order `|gamma|`; the row holds the max over all `gamma`
    /// of that order.
    pub order: usize,
    pub value: f64,
}

/// `max_{|x| >= 1} |D^gamma dv^k(t, x)| (1 + |x|^q)` for `|gamma| <= 3`,
/// every retained `k >= 1` and every time node.
pub fn decay_envelope_table(trace: &IterationTrace, q: f64) -> Result<Vec<DecayRow>> {
    let grid = trace.scheme().config().grid;
    if grid.extent() < 3.0 {
        return Err(Error::Parameter {
            name: "R",
            value: grid.extent(),
            reason: "decay envelopes need R >= 3",
        });
    }
    let opts = NormOptions::interior();
    let mut rows = Vec::new();
    for k in 1..=trace.last_k() {
        let Some(dv) = trace.increment(k) else { continue };
        let cells: Vec<(usize, usize)> = (0..dv.len()).flat_map(|m| (0..=3).map(move |o| (m, o))).collect();
        let vals = cells
            .par_iter()
            .map(|&(m, order)| envelope(dv.slice(m), order, q, &opts))
            .collect::<Result<Vec<_>>>()?;
        for ((m, order), value) in cells.into_iter().zip(vals) {
            rows.push(DecayRow { k, t: dv.time(m), order, value });
        }
    }
    Ok(rows)
}

fn envelope(f: &VectorField3, order: usize, q: f64, opts: &NormOptions) -> Result<f64> {
    let mut best: f64 = 0.0;
    for gamma in multi_indices_up_to(order).into_iter().filter(|g| g.order() == order) {
        for c in f.components() {
            let d = fd_derivative(c, gamma)?;
            best = best.max(discrete_norm(&d, NormKind::DecayEnvelope(q), opts)?);
        }
    }
    Ok(best)
}

/// For each derivative order: `max_{k >= k_ref} sup_t E / sup_t E(k_ref)`.
/// The envelope is inherited uniformly in `k` when every entry stays below 2.
pub fn decay_growth_over_k(rows: &[DecayRow], k_ref: usize) -> Vec<(usize, f64)> {
    let sup = |k: usize, order: usize| {
        rows.iter()
            .filter(|r| r.k == k && r.order == order)
            .map(|r| r.value)
            .fold(0.0, f64::max)
    };
    let k_max = rows.iter().map(|r| r.k).max().unwrap_or(0);
    (0..=3)
        .map(|order| {
            let base = sup(k_ref, order);
            let worst = (k_ref..=k_max).map(|k| sup(k, order)).fold(0.0, f64::max);
            (order, if base > 0.0 { worst / base } else { 0.0 })
        })
        .collect()
}

/// `(k, t, ||div v^k(t)||_C0)` from the trace.
pub fn incompressibility_residual(trace: &IterationTrace) -> Vec<(usize, f64, f64)> {
    trace.divergence_table().to_vec()
}

fn sup_div(trace: &IterationTrace, k: usize) -> Option<f64> {
    trace
        .divergence_table()
        .iter()
        .filter(|r| r.0 == k && r.1 > 0.0)
        .map(|r| r.2)
        .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))))
}

/// Largest `sup_{t > 0} ||div v^{k+1}(t)|| / sup_{t > 0} ||div v^k(t)||`
/// over consecutive stored `k`.
pub fn divergence_growth(trace: &IterationTrace) -> f64 {
    let mut ks: Vec<usize> = trace.divergence_table().iter().map(|r| r.0).collect();
    ks.dedup();
    let mut worst: f64 = 0.0;
    for &k in &ks {
        if let (Some(a), Some(b)) = (sup_div(trace, k), sup_div(trace, k + 1)) {
            if a > RATIO_GUARD {
                worst = worst.max(b / a);
            }
        }
    }
    worst
}

/// Same ratio taken at each time node separately.
pub fn divergence_growth_pointwise(trace: &IterationTrace) -> f64 {
    let table = trace.divergence_table();
    let mut worst: f64 = 0.0;
    for &(k, t, a) in table.iter().filter(|r| r.1 > 0.0) {
        if let Some(&(_, _, b)) = table.iter().find(|r| r.0 == k + 1 && r.1 == t) {
            if a > RATIO_GUARD {
                worst = worst.max(b / a);
            }
        }
    }
    worst
}

/// `log2` of the ratio of `sup_{t > 0} ||div v^k(t)||` between two runs whose
/// spacings differ by a factor of two.
pub fn divergence_refinement_slope(coarse: &IterationTrace, fine: &IterationTrace, k: usize) -> Option<f64> {
    let (a, b) = (sup_div(coarse, k)?, sup_div(fine, k)?);
    let ratio = coarse.scheme().config().grid.h() / fine.scheme().config().grid.h();
    Some((a / b).ln() / ratio.ln())
}

/// Runs over several viscosities of one configuration template.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscositySweep {
    pub nus: Vec<f64>,
    /// `M[p][q] = ||dv^(nu_p)(T) - dv^(nu_q)(T)||_C1` with
    /// `dv = v^K - v^f *_sp G_nu`.
    pub cauchy: Vec<Vec<f64>>,
    /// Sup-in-time contraction ratios in `H^2 ∩ C^2` for each viscosity.
    pub ratios: Vec<Vec<ContractionRatio>>,
}

impl ViscositySweep {
    /// `M[p][p + 1]`.
    pub fn consecutive(&self) -> Vec<f64> {
        (0..self.nus.len() - 1).map(|p| self.cauchy[p][p + 1]).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.consecutive().windows(2).all(|w| w[1] < w[0])
    }

    /// `max / min - 1` of the ratio at index `k` across the sweep.
    pub fn ratio_spread(&self, k: usize) -> Option<f64> {
        let vals: Vec<f64> = self
            .ratios
            .iter()
            .map(|rs| rs.iter().find(|r| r.k == k).map(|r| r.ratio))
            .collect::<Option<_>>()?;
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        Some(max / min - 1.0)
    }
}

/// Runs `template` at each `nu` (descending) and compares the total
/// increments at the final time.
pub fn viscosity_sweep(template: &IterationConfig, nus: &[f64]) -> Result<ViscositySweep> {
    if nus.len() < 3 {
        return Err(Error::Parameter {
            name: "nu_sweep",
            value: nus.len() as f64,
            reason: "need at least three viscosities",
        });
    }
    let mut finals = Vec::new();
    let mut ratios = Vec::new();
    for &nu in nus {
        let mut cfg = template.clone();
        cfg.nu = nu;
        cfg.retention = Retention::Last(3);
        cfg.stop_tol = 0.0;
        let trace = run_picard(&cfg)?;
        let k = trace.last_k();
        let dv = trace.init_increment(k).expect("last state retained");
        finals.push(dv.slice(dv.len() - 1).clone());
        ratios.push(sup_ratios(&trace, NormKind::HmCm(2), false));
        log::info!("nu sweep: finished nu = {nu}");
    }
    let p = finals.len();
    let mut cauchy = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a + 1..p {
            let d = discrete_norm(&finals[a].sub(&finals[b]), NormKind::Cm(1), &NormOptions::interior())?;
            cauchy[a][b] = d;
            cauchy[b][a] = d;
        }
    }
    Ok(ViscositySweep {
        nus: nus.to_vec(),
        cauchy,
        ratios,
    })
}
