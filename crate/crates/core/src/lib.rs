//! Super-resolution of spike trains from low-frequency Fourier data.
//!
//! The crate covers the measurement model, rigorous bounds on the
//! interpolation kernel, the dual-certificate construction and its
//! certification, an ADMM solver for the semidefinite dual programs,
//! support recovery and the phase-transition experiments.

pub mod error;
pub mod model;
pub mod dirichlet;
pub mod kernel;
pub mod bounds;
pub mod kernel_sum;
pub mod certificate;
pub mod certify;
pub mod io;
pub mod sdp;
pub mod recovery;
pub mod experiments;
pub mod oracle;

pub use error::{Error, Result};
