//! Complex-valued residual CNN that enhances normalised LS CSI.
//!
//! The first block works on the antenna-frequency grid, the second on the
//! angle-delay grid produced by [`crate::transform::isac_transform`].
//! Gradients treat real and imaginary parts as independent real parameters
//! and are carried as `∂J/∂Re + j·∂J/∂Im`.

mod layers;
mod model;
mod train;

pub use layers::{clrelu, complex_conv, complex_linear, ComplexConvLayer, KERNEL};
pub use model::{loss, nmse_db, ConvBlock, EnhancerModel, ForwardTrace, DEFAULT_HIDDEN, DEFAULT_SLOPE, NMSE_FLOOR_DB};
pub use train::{train, Adam, BatchGradient, Sample, Sequential, TrainConfig, TrainRecord};
