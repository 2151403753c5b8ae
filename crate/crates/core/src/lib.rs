//! Physical-layer ISAC toolkit.
//!
//! Generates MIMO-OFDM channel state information (CSI) for a uniform linear
//! array, enhances noisy least-squares CSI estimates with a complex-valued
//! residual CNN that works partly in the angle-delay domain, and feeds the
//! enhanced CSI into MUSIC angle-of-arrival estimation, zero-forcing spatial
//! filtering, biased-FFT range estimation and ML QAM demodulation.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and
//! the Monte-Carlo drivers live in the `isac-sim` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod cnn;
pub mod comm;
mod error;
pub mod estimate;
pub mod numerics;
pub mod rng;
pub mod sensing;
pub mod transform;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, ComplexTensor, C64};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
