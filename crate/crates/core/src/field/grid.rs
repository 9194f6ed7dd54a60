use crate::error::{Error, Result};

/// Uniform grid on the truncated cube `[-R, R]^3`, shifted by half a cell.
///
/// Node `j` along each axis sits at `-R + j*h + shift`. [`Grid::new`] uses
/// `shift = h/2`, so with odd `n` no node falls on the origin, where the
/// singular profiles have unbounded derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    extent: f64,
    n: usize,
    h: f64,
    shift: f64,
}

impl Grid {
    pub const MIN_POINTS: usize = 9;

    /// Shifted grid with `n` (odd, at least 9) points per axis.
    pub fn new(extent: f64, n: usize) -> Result<Self> {
        let g = Self::unshifted(extent, n)?;
        Ok(Self {
            shift: 0.5 * g.h,
            ..g
        })
    }

    /// Same node layout without the half-cell shift; node `(n-1)/2` is the origin.
    pub fn unshifted(extent: f64, n: usize) -> Result<Self> {
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::BadExtent(extent));
        }
        if n % 2 == 0 {
            return Err(Error::EvenN(n));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::TooFewPoints(n));
        }
        Ok(Self {
            extent,
            n,
            h: 2.0 * extent / (n - 1) as f64,
            shift: 0.0,
        })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `j` along any axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.h + self.shift
    }

    /// Flat index, x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unflatten(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }

    /// True within two cells of any face, where the stencils go one-sided.
    #[inline]
    pub fn in_boundary_layer(&self, idx: usize) -> bool {
        let n = self.n;
        self.unflatten(idx).iter().any(|&a| a < 2 || a + 2 >= n)
    }

    /// Index of the node closest to `p`.
    pub fn nearest(&self, p: [f64; 3]) -> usize {
        let axis = |x: f64| {
            let j = ((x + self.extent - self.shift) / self.h).round();
            j.clamp(0.0, (self.n - 1) as f64) as usize
        };
        self.idx(axis(p[0]), axis(p[1]), axis(p[2]))
    }

    /// Same extent, refined so the spacing halves.
    pub fn refined(&self) -> Result<Self> {
        let g = Grid::unshifted(self.extent, 2 * self.n - 1)?;
        Ok(Self {
            shift: if self.shift == 0.0 { 0.0 } else { 0.5 * g.h },
            ..g
        })
    }
}
