use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid point count must be odd, got n = {0}")]
    EvenN(usize),
    #[error("grid needs at least 9 points per axis for the stencils, got n = {0}")]
    TooFewPoints(usize),
    #[error("grid half-width must be positive and finite, got R = {0}")]
    BadExtent(f64),
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    DerivativeOrder(usize),
    #[error("norm order {0} is outside the supported range 0..=3")]
    NormOrder(usize),
    #[error("decay order must be positive, got {0}")]
    DecayOrder(f64),
    #[error("heat kernel needs nu > 0 and t > 0, got nu = {nu}, t = {t}")]
    KernelParams { nu: f64, t: f64 },
    #[error("kernel evaluated at |x| = {0:e}, below the singular-point guard")]
    SingularPoint(f64),
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("derivative of order {0} of the profile is singular at r = 0")]
    SingularAtOrigin(usize),
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("heat kernel tail mass {tail:e} outside the grid exceeds 1e-4")]
    KernelOverflowsDomain { tail: f64 },
    #[error("time slab: {0}")]
    InsufficientSlices(String),
    #[error("non-finite value in iterate k = {k} at t = {t}")]
    NonFiniteField { k: usize, t: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("i/o: {0}")]
    Io(String),
    #[error("snapshot format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
