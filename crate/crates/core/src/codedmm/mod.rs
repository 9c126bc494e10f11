//! Coded matrix multiplication.
//!
//! Every scheme hands each server an encoded operand pair, and decodes the
//! product (or an estimate of it) from any `threshold()` of the results.

mod exact;
mod oversketch;
mod sampling;
mod scheme;

pub use exact::{entangled_example, matdot, polynomial_code};
pub use oversketch::{oversketch, oversketch_effective_width, oversketch_with_sketch};
pub use sampling::{coded_independent_sampling, coded_setwise_sampling, weighted_cr_cmm};
pub use scheme::{
    Ambiguity, CMMScheme, Exactness, SampledBlocks, ServerOutput, ServerTask, REAL_OUTPUT_TOL,
};
