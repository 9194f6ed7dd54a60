use super::{fd_derivative, Grid, GridField, MultiIndex, ScalarField3};
use crate::error::{Error, Result};

/// Which grid norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `max |D^g f|` over nodes and `|g| <= m`.
    Cm(usize),
    /// Trapezoid quadrature of `sum_{|g| <= m} |D^g f|^2`, square-rooted.
    Hm(usize),
    /// `Hm(m) + Cm(m)`, the `H^m ∩ C^m` norm.
    HmCm(usize),
    /// `max_{|x| >= 1} |f(x)| (1 + |x|^q)`.
    DecayEnvelope(f64),
}

impl NormKind {
    pub fn label(&self) -> String {
        match self {
            NormKind::Cm(m) => format!("C{m}"),
            NormKind::Hm(m) => format!("H{m}"),
            NormKind::HmCm(m) => format!("H{m}C{m}"),
            NormKind::DecayEnvelope(q) => format!("decay{q}"),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            NormKind::Cm(m) | NormKind::Hm(m) | NormKind::HmCm(m) if m > 3 => {
                Err(Error::NormOrder(m))
            }
            NormKind::DecayEnvelope(q) if !(q > 0.0) => Err(Error::DecayOrder(q)),
            _ => Ok(()),
        }
    }
}

/// Node masks applied before any norm is taken.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormOptions {
    /// Drop nodes within two cells of a face.
    pub exclude_boundary_layer: bool,
    /// Drop nodes with `|x|` below this radius.
    pub exclude_origin_radius: Option<f64>,
    /// Keep only nodes with `|x|_inf` at most this.
    pub core_half_width: Option<f64>,
}

impl NormOptions {
    pub const ALL: NormOptions = NormOptions {
        exclude_boundary_layer: false,
        exclude_origin_radius: None,
        core_half_width: None,
    };

    pub fn interior() -> Self {
        Self {
            exclude_boundary_layer: true,
            exclude_origin_radius: None,
            core_half_width: None,
        }
    }

    /// Interior nodes of the central box `|x|_inf <= R/2`, away from the
    /// smearing of the zero extension at the faces.
    pub fn core(grid: &Grid) -> Self {
        Self {
            core_half_width: Some(0.5 * grid.extent()),
            ..Self::interior()
        }
    }

    /// Interior nodes outside the ball of radius `5h` around the origin.
    pub fn origin_excluded(grid: &Grid) -> Self {
        Self {
            exclude_boundary_layer: true,
            exclude_origin_radius: Some(5.0 * grid.h()),
            core_half_width: None,
        }
    }

    pub fn keeps(&self, grid: &Grid, idx: usize) -> bool {
        if self.exclude_boundary_layer && grid.in_boundary_layer(idx) {
            return false;
        }
        if let Some(w) = self.core_half_width {
            if grid.point(idx).iter().any(|x| x.abs() > w) {
                return false;
            }
        }
        match self.exclude_origin_radius {
            Some(r0) => grid.radius(idx) >= r0,
            None => true,
        }
    }
}

pub fn multi_indices_up_to(m: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=m {
        for a in 0..=total {
            for b in 0..=total - a {
                out.push(MultiIndex::new(a as u8, b as u8, (total - a - b) as u8));
            }
        }
    }
    out
}

fn trapezoid_weight(grid: &Grid, idx: usize) -> f64 {
    let n = grid.n();
    let h = grid.h();
    grid.unflatten(idx)
        .iter()
        .map(|&a| if a == 0 || a == n - 1 { 0.5 * h } else { h })
        .product()
}

fn cm(parts: &[&ScalarField3], m: usize, opts: &NormOptions) -> Result<f64> {
    let grid = *parts[0].grid();
    let mut best: f64 = 0.0;
    for f in parts {
        for gamma in multi_indices_up_to(m) {
            let d = fd_derivative(f, gamma)?;
            for (i, v) in d.values().iter().enumerate() {
                if opts.keeps(&grid, i) {
                    best = best.max(v.abs());
                }
            }
        }
    }
    Ok(best)
}

fn hm(parts: &[&ScalarField3], m: usize, opts: &NormOptions) -> Result<f64> {
    let grid = *parts[0].grid();
    let mut acc = 0.0;
    for f in parts {
        for gamma in multi_indices_up_to(m) {
            let d = fd_derivative(f, gamma)?;
            for (i, v) in d.values().iter().enumerate() {
                if opts.keeps(&grid, i) {
                    acc += trapezoid_weight(&grid, i) * v * v;
                }
            }
        }
    }
    Ok(acc.sqrt())
}

fn decay(parts: &[&ScalarField3], q: f64, opts: &NormOptions) -> f64 {
    let grid = *parts[0].grid();
    let mut best: f64 = 0.0;
    for f in parts {
        for (i, v) in f.values().iter().enumerate() {
            let r = grid.radius(i);
            if r >= 1.0 && opts.keeps(&grid, i) {
                best = best.max(v.abs() * (1.0 + r.powf(q)));
            }
        }
    }
    best
}

/// Grid norm of a scalar or vector field; vector norms pool all components
/// (max for C-type norms, sum of squares for H-type norms).
pub fn discrete_norm<F: GridField>(f: &F, kind: NormKind, opts: &NormOptions) -> Result<f64> {
    kind.validate()?;
    let parts = f.scalar_components();
    match kind {
        NormKind::Cm(m) => cm(&parts, m, opts),
        NormKind::Hm(m) => hm(&parts, m, opts),
        NormKind::HmCm(m) => Ok(hm(&parts, m, opts)? + cm(&parts, m, opts)?),
        NormKind::DecayEnvelope(q) => Ok(decay(&parts, q, opts)),
    }
}
