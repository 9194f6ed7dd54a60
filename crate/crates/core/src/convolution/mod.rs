//! Spatial convolution with the heat kernel, the Duhamel time integral, and
//! the Newtonian-kernel operators (Leray term, projection, Biot-Savart).

mod leray;
mod moment;
mod spacetime;
mod spatial;

pub use leray::{
    biot_savart_velocity, gradient_potential_direct, leray_project, leray_source, leray_term,
    spectral_poisson_gradient, spectral_poisson_gradient_padded, LerayOperator,
};
pub use moment::second_moment;
pub use spacetime::{conv_spacetime, Duhamel, TimeSlab};
pub use spatial::{
    check_kernel_support, conv_spatial, conv_spatial_vector, kernel_tail_mass, ConvPath,
    SeparableKernel,
};
