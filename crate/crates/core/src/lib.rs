//! Numerical laboratory for singular data in the heat-kernel Picard scheme
//! of the time-reversed 3-D Euler equation with viscosity: grids and norms,
//! kernels, the singular data family, convolution operators, the velocity
//! and vorticity iterations, and the diagnostics that audit them.

pub mod convolution;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod iteration;
pub mod kernels;
pub mod util;

pub use convolution::{ConvPath, TimeSlab};
pub use data::{CompletionMode, DataSpec, ProfileParams, RadialProfile};
pub use error::{Error, Result};
pub use diagnostics::DiagnosticsReport;
pub use iteration::{IterationConfig, IterationState, IterationTrace, SignPack};
pub use field::{Grid, MultiIndex, NormKind, NormOptions, ScalarField3, VectorField3};
