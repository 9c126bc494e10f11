use rand::seq::index::sample;

use crate::codedmm::exact::{check_inner, matdot_like};
use crate::codedmm::scheme::{CMMScheme, Exactness, SampledBlocks};
use crate::error::{Error, Result};
use crate::linalg::{BlockPartition, EvalPoints, Matrix, PartitionScheme};
use crate::rng::substream;
use crate::sketch::{
    block_cr_distribution, expected_trials_until_distinct, sample_until_r_distinct, BlockWeighting,
    SamplingDistribution,
};

fn split(a: &Matrix, b: &Matrix, k: usize) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    check_inner(a, b)?;
    BlockPartition::new(k, PartitionScheme::ColsARowsB)?.split_pair(a, b)
}

/// Scale block pair `(A^i, B_i)` symmetrically so its product picks up
/// `factor`.
fn scaled_pairs(
    a_blocks: &[Matrix],
    b_blocks: &[Matrix],
    indices: &[usize],
    factors: &[f64],
) -> (Vec<Matrix>, Vec<Matrix>) {
    indices
        .iter()
        .zip(factors)
        .map(|(&i, &f)| (a_blocks[i].scale(f.sqrt()), b_blocks[i].scale(f.sqrt())))
        .unzip()
}

/// `r` block pairs drawn i.i.d. from `dist`, each importance-weighted by
/// `1 / (r p)`, then MatDot-encoded; decodes from any `2r - 1` servers to an
/// unbiased estimate of `A B`.
pub fn coded_independent_sampling(
    a: &Matrix,
    b: &Matrix,
    k: usize,
    r: usize,
    dist: &SamplingDistribution,
    points: &EvalPoints,
    seed: u64,
) -> Result<CMMScheme> {
    let (a_blocks, b_blocks) = split(a, b, k)?;
    if dist.len() != k {
        return Err(Error::InvalidParameter(format!(
            "distribution over {} blocks, expected {k}",
            dist.len()
        )));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    let mut rng = substream(seed, "coded-independent", 0);
    let indices: Vec<usize> = (0..r).map(|_| dist.sample(&mut rng)).collect();
    let factors: Vec<f64> = indices.iter().map(|&i| 1.0 / (r as f64 * dist.prob(i))).collect();
    let (left, right) = scaled_pairs(&a_blocks, &b_blocks, &indices, &factors);
    let mut scheme = matdot_like(
        "coded-independent",
        left,
        right,
        points,
        1.0,
        Exactness::UnbiasedApproximate,
        a,
        b,
    )?;
    scheme.sample = Some(SampledBlocks {
        weights: vec![1; r],
        indices,
        factors,
    });
    Ok(scheme)
}

/// A uniformly random `r`-subset of the `k` block pairs, MatDot-encoded;
/// decodes to `(k / r) sum_{i in I} A^i B_i`.
pub fn coded_setwise_sampling(
    a: &Matrix,
    b: &Matrix,
    k: usize,
    r: usize,
    points: &EvalPoints,
    seed: u64,
) -> Result<CMMScheme> {
    let (a_blocks, b_blocks) = split(a, b, k)?;
    if r == 0 || r > k {
        return Err(Error::InvalidParameter(format!("need 1 <= r <= k, got r = {r}, k = {k}")));
    }
    let mut rng = substream(seed, "coded-setwise", 0);
    let mut indices = sample(&mut rng, k, r).into_vec();
    indices.sort_unstable();
    let factors = vec![k as f64 / r as f64; r];
    let (left, right) = scaled_pairs(&a_blocks, &b_blocks, &indices, &factors);
    let mut scheme = matdot_like(
        "coded-setwise",
        left,
        right,
        points,
        1.0,
        Exactness::UnbiasedApproximate,
        a,
        b,
    )?;
    scheme.sample = Some(SampledBlocks {
        weights: vec![1; r],
        indices,
        factors,
    });
    Ok(scheme)
}

/// Block pairs drawn with replacement, proportionally to
/// `||A^i||_F^2 ||B_i||_F^2`, until `r` distinct pairs appear. Pair `I_j`
/// drawn `w_j` times enters with weight `w_j / (E[T] p_{I_j})`, where `T` is
/// the number of draws; decodes from any `2r - 1` servers.
pub fn weighted_cr_cmm(
    a: &Matrix,
    b: &Matrix,
    k: usize,
    r: usize,
    points: &EvalPoints,
    seed: u64,
) -> Result<CMMScheme> {
    let (a_blocks, b_blocks) = split(a, b, k)?;
    let dist = block_cr_distribution(a, b, k, BlockWeighting::SquaredNorm)?;
    let drawn = sample_until_r_distinct(&dist, r, seed)?;
    let expected_trials = expected_trials_until_distinct(&dist, r)?;
    let factors: Vec<f64> = drawn
        .indices
        .iter()
        .zip(&drawn.weights)
        .map(|(&i, &w)| w as f64 / (expected_trials * dist.prob(i)))
        .collect();
    let (left, right) = scaled_pairs(&a_blocks, &b_blocks, &drawn.indices, &factors);
    let mut scheme = matdot_like(
        "weighted-cr",
        left,
        right,
        points,
        1.0,
        Exactness::UnbiasedApproximate,
        a,
        b,
    )?;
    scheme.sample = Some(SampledBlocks {
        indices: drawn.indices,
        weights: drawn.weights,
        factors,
    });
    Ok(scheme)
}
