//! Exact and approximate gradient codes.
//!
//! Server `i` returns `sum_j G[i][j] g_j` over its partial gradients; from
//! the responding set `I` a decoding vector `a_I` recombines the answers so
//! that `a_I^T G_I` reproduces the all-ones row (or the weight row for
//! weighted codes).

mod bernoulli;
mod bibd;
mod brs;
mod expander;
mod frc;
mod scheme;
mod weighted;

pub use bernoulli::bernoulli_scheme;
pub use bibd::{bibd_rho, bibd_scheme, complete_design, fano_plane, validate_design, DesignParameters};
pub use brs::{balanced_mask, brs_default, brs_scheme, MaskMatrix};
pub use expander::{
    complete_graph, expander_scheme, expander_spectrum, petersen_graph, random_regular_graph,
};
pub use frc::frc_scheme;
pub use scheme::{
    binomial, decoding_error, gc_error, gc_max_error, one_step_decoder, optimal_decoder, BrsParts,
    DecoderKind, DecodingVector, ExpanderSpectrum, GCScheme, MaxError, SearchMode, EXHAUSTIVE_LIMIT,
    SAMPLED_SETS,
};
pub use weighted::{weighted_gc, WeightedGc};
