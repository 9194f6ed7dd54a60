use std::io::Write;

use rayon::prelude::*;

use super::{IterationState, PicardScheme, Retention};
use crate::convolution::TimeSlab;
use crate::error::Result;
use crate::field::{discrete_norm, divergence, NormKind, NormOptions, VectorField3};

/// Which increment a norm record refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `dv^k = v^k - v^{k-1}`.
    Increment,
    /// `dv^{init,k} = v^k - v^f *_sp G`.
    InitIncrement,
    /// `domega^k = omega^k - omega^{k-1}`.
    VorticityIncrement,
}

impl Quantity {
    pub fn label(&self) -> &'static str {
        match self {
            Quantity::Increment => "dv",
            Quantity::InitIncrement => "dv_init",
            Quantity::VorticityIncrement => "domega",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormRecord {
    pub k: usize,
    pub t: f64,
    pub quantity: Quantity,
    pub kind: NormKind,
    pub origin_excluded: bool,
    pub value: f64,
}

/// States and per-`(k, t)` norm tables of one Picard run.
pub struct IterationTrace {
    scheme: PicardScheme,
    states: Vec<IterationState>,
    norms: Vec<NormRecord>,
    divergence: Vec<(usize, f64, f64)>,
    stopped_early: bool,
}

const STOP_NORM: NormKind = NormKind::Cm(2);

impl IterationTrace {
    pub(super) fn run(scheme: PicardScheme) -> Result<Self> {
        let cfg = scheme.config().clone();
        let mut trace = Self {
            states: Vec::new(),
            norms: Vec::new(),
            divergence: Vec::new(),
            stopped_early: false,
            scheme,
        };
        let s0 = trace.scheme.init();
        trace.record_divergence(&s0);
        trace.states.push(s0);
        for k in 1..=cfg.k_max {
            let prev = trace.states.last().expect("state 0 is stored");
            let next = trace.scheme.step(prev)?;
            let dv = next.v.sub(&prev.v)?;
            let dw = match (&next.omega, &prev.omega) {
                (Some(w), Some(w_prev)) => Some(w.sub(w_prev)?),
                _ => None,
            };
            let stop = sup_norm(&dv, STOP_NORM)? < cfg.stop_tol;
            trace.record(k, Quantity::Increment, &dv)?;
            let init = next.v.sub(trace.scheme.base())?;
            trace.record(k, Quantity::InitIncrement, &init)?;
            if let Some(dw) = dw {
                trace.record(k, Quantity::VorticityIncrement, &dw)?;
            }
            trace.record_divergence(&next);
            trace.states.push(next);
            if let Retention::Last(n) = cfg.retention {
                if trace.states.len() > n {
                    trace.states.remove(0);
                }
            }
            if stop {
                log::info!("increment C2 norm below {:e} at k = {k}; stopping", cfg.stop_tol);
                trace.stopped_early = true;
                break;
            }
        }
        Ok(trace)
    }

    fn record(&mut self, k: usize, quantity: Quantity, slab: &TimeSlab) -> Result<()> {
        let cfg = self.scheme.config();
        let grid = cfg.grid;
        let mut masks = vec![(false, NormOptions::interior())];
        if cfg.data.profile.is_singular() {
            masks.push((true, NormOptions::origin_excluded(&grid)));
        }
        let (kinds, masks) = (&cfg.norms, &masks);
        let cells: Vec<(usize, NormKind, bool, NormOptions)> = (0..slab.len())
            .flat_map(|m| {
                kinds
                    .iter()
                    .flat_map(move |&kind| masks.iter().map(move |&(ex, o)| (m, kind, ex, o)))
            })
            .collect();
        let values = cells
            .par_iter()
            .map(|(m, kind, _, o)| discrete_norm(slab.slice(*m), *kind, o))
            .collect::<Result<Vec<_>>>()?;
        for ((m, kind, ex, _), value) in cells.into_iter().zip(values) {
            self.norms.push(NormRecord {
                k,
                t: slab.time(m),
                quantity,
                kind,
                origin_excluded: ex,
                value,
            });
        }
        Ok(())
    }

    fn record_divergence(&mut self, s: &IterationState) {
        let k = s.k;
        let rows: Vec<(usize, f64, f64)> = (0..s.v.len())
            .into_par_iter()
            .map(|m| {
                let d = divergence(s.v.slice(m));
                let c0 = discrete_norm(&d, NormKind::Cm(0), &NormOptions::core(d.grid())).expect("C0 is valid");
                (k, s.v.time(m), c0)
            })
            .collect();
        self.divergence.extend(rows);
    }

    pub fn scheme(&self) -> &PicardScheme {
        &self.scheme
    }

    /// Largest Picard index reached.
    pub fn last_k(&self) -> usize {
        self.states.last().map_or(0, |s| s.k)
    }

    pub fn stopped_early(&self) -> bool {
        self.stopped_early
    }

    /// State `k`, if it is still retained.
    pub fn state(&self, k: usize) -> Option<&IterationState> {
        self.states.iter().find(|s| s.k == k)
    }

    pub fn state_mut(&mut self, k: usize) -> Option<&mut IterationState> {
        self.states.iter_mut().find(|s| s.k == k)
    }

    pub fn states(&self) -> &[IterationState] {
        &self.states
    }

    /// `v^k - v^{k-1}` on every node, when both states are retained.
    pub fn increment(&self, k: usize) -> Option<TimeSlab> {
        let (a, b) = (self.state(k)?, self.state(k.checked_sub(1)?)?);
        a.v.sub(&b.v).ok()
    }

    /// `v^k - v^f *_sp G` on every node.
    pub fn init_increment(&self, k: usize) -> Option<TimeSlab> {
        self.state(k)?.v.sub(self.scheme.base()).ok()
    }

    pub fn norms(&self) -> &[NormRecord] {
        &self.norms
    }

    /// Records for one `(quantity, kind, mask)` series, ordered by `(k, t)`.
    pub fn series(&self, quantity: Quantity, kind: NormKind, origin_excluded: bool) -> Vec<&NormRecord> {
        self.norms
            .iter()
            .filter(|r| r.quantity == quantity && r.kind == kind && r.origin_excluded == origin_excluded)
            .collect()
    }

    /// `sup_t` of a recorded norm at index `k`.
    pub fn sup_over_time(&self, k: usize, quantity: Quantity, kind: NormKind, origin_excluded: bool) -> Option<f64> {
        let vals: Vec<f64> = self
            .series(quantity, kind, origin_excluded)
            .into_iter()
            .filter(|r| r.k == k)
            .map(|r| r.value)
            .collect();
        (!vals.is_empty()).then(|| vals.into_iter().fold(0.0, f64::max))
    }

    /// `(k, t, ||div v^k(t)||_C0)` over the central box `|x|_inf <= R/2`.
    pub fn divergence_table(&self) -> &[(usize, f64, f64)] {
        &self.divergence
    }

    /// Norm table as CSV; `preamble` lines are written first, each behind `# `.
    pub fn write_norm_csv<W: Write>(&self, mut w: W, preamble: &[String]) -> std::io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "k,t,quantity,norm_kind,value,origin_excluded")?;
        for r in &self.norms {
            writeln!(
                w,
                "{},{:.17e},{},{},{:.17e},{}",
                r.k,
                r.t,
                r.quantity.label(),
                r.kind.label(),
                r.value,
                r.origin_excluded
            )?;
        }
        Ok(())
    }
}

fn sup_norm(slab: &TimeSlab, kind: NormKind) -> Result<f64> {
    let vals = slab
        .slices()
        .par_iter()
        .map(|f: &VectorField3| discrete_norm(f, kind, &NormOptions::interior()))
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}
