use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::sketch::distribution::SamplingDistribution;

/// Outcome of sampling with replacement until `r` distinct indices appear.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedSample {
    /// Distinct indices, in order of first appearance.
    pub indices: Vec<usize>,
    /// Draw count of each index; always >= 1.
    pub weights: Vec<usize>,
    /// Total number of draws, the sum of `weights`.
    pub trials: usize,
}

pub fn sample_until_r_distinct(dist: &SamplingDistribution, r: usize, seed: u64) -> Result<WeightedSample> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    let support = dist.support_size();
    if support < r {
        return Err(Error::UnreachableTarget { target: r, support });
    }
    let sampler = dist.sampler();
    let mut rng = substream(seed, "until-distinct", 0);
    let mut slot = vec![usize::MAX; dist.len()];
    let mut indices = Vec::with_capacity(r);
    let mut weights = Vec::with_capacity(r);
    let mut trials = 0;
    while indices.len() < r {
        let i = rand::distr::Distribution::sample(&sampler, &mut rng);
        trials += 1;
        if slot[i] == usize::MAX {
            slot[i] = indices.len();
            indices.push(i);
            weights.push(1);
        } else {
            weights[slot[i]] += 1;
        }
    }
    Ok(WeightedSample {
        indices,
        weights,
        trials,
    })
}

/// Largest support for which [`expected_trials_until_distinct`] enumerates
/// subsets.
pub const MAX_EXACT_SUPPORT: usize = 22;

/// Exact `E[T]` for [`sample_until_r_distinct`], by dynamic programming over
/// the set of indices seen so far.
pub fn expected_trials_until_distinct(dist: &SamplingDistribution, r: usize) -> Result<f64> {
    let support = dist.support_size();
    if r == 0 || support < r {
        return Err(Error::UnreachableTarget { target: r, support });
    }
    let atoms: Vec<f64> = dist.probs().iter().copied().filter(|&p| p > 0.0).collect();
    let k = atoms.len();
    if k > MAX_EXACT_SUPPORT {
        return Err(Error::InvalidParameter(format!(
            "exact expectation limited to {MAX_EXACT_SUPPORT} atoms, got {k}"
        )));
    }
    // reach[mask]: probability that the distinct set ever equals `mask`.
    let mut reach = vec![0.0f64; 1 << k];
    let mut mass = vec![0.0f64; 1 << k];
    reach[0] = 1.0;
    let mut expected = 0.0;
    for mask in 0usize..1 << k {
        if mask != 0 {
            let low = mask.trailing_zeros() as usize;
            mass[mask] = mass[mask & (mask - 1)] + atoms[low];
        }
        if reach[mask] == 0.0 || mask.count_ones() as usize >= r {
            continue;
        }
        let rest = 1.0 - mass[mask];
        // Expected dwell in `mask` is 1 / rest draws.
        expected += reach[mask] / rest;
        for (j, &p) in atoms.iter().enumerate() {
            if mask & (1 << j) == 0 {
                reach[mask | (1 << j)] += reach[mask] * p / rest;
            }
        }
    }
    Ok(expected)
}
