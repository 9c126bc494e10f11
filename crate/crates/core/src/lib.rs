//! Coded distributed computing toolkit.
//!
//! * [`linalg`]: dense matrices, block partitions, Vandermonde and Lagrange
//!   machinery, spectral helpers.
//! * [`sketch`]: sampling distributions, sketching operators and error meters.
//! * [`gradcode`]: exact and approximate gradient codes.
//! * [`codedmm`]: exact and approximate coded matrix multiplication.
//! * [`simulator`]: event-driven straggler simulation and gradient descent.

pub mod codedmm;
pub mod error;
pub mod gradcode;
pub mod linalg;
pub mod rng;
pub mod simulator;
pub mod sketch;

pub use error::{Error, Result};
pub use linalg::{Field, Matrix, Scalar};
