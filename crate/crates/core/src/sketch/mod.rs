//! Randomized sketches, sampling distributions and approximate products.

mod amm;
mod distribution;
mod operator;
mod weighted;

pub use amm::{
    amm_error, approximate_product, basic_matrix_multiplication, se_error, sketched_product,
    theorem1_validate, NormKind, SuccessRate, Theorem1Report, NOISE_BAND_Z,
};
pub use distribution::{
    block_cr_distribution, block_leverage_distribution, cr_distribution, leverage_distribution,
    leverage_scores, BlockWeighting, DistributionKind, SamplingDistribution,
};
pub use operator::{
    countsketch, countsketch_from_hash, countsketch_operator, gaussian_sketch, hadamard_entry,
    row_sampling_sketch, srht, SketchOperator, SketchStructure, SketchVariant,
};
pub use weighted::{
    expected_trials_until_distinct, sample_until_r_distinct, WeightedSample, MAX_EXACT_SUPPORT,
};
