use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{full_column_basis, split_cols, split_rows, Matrix};

/// Where a [`SamplingDistribution`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    /// Column-row pairs, `p_i ∝ ||A^(i)|| ||B_(i)||`.
    CrRows,
    /// Leverage scores, `p_i = l_i / d`.
    Leverage,
    /// Block pairs, `p_i ∝ ||A^i||_F ||B_i||_F`.
    BlockCr,
    /// Block pairs, `p_i ∝ ||A^i||_F^2 ||B_i||_F^2`.
    BlockCrSquared,
    /// Block leverage scores, `p_i = ||U_i||_F^2 / d`.
    BlockLeverage,
    Uniform,
    UserSupplied,
}

/// How block-pair importance is weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockWeighting {
    /// Product of Frobenius norms.
    Norm,
    /// Product of squared Frobenius norms.
    SquaredNorm,
}

/// A probability vector over `N` indices.
///
/// `beta` is the lower-bound fidelity of an approximate distribution
/// (`p_i >= beta * p_i^exact`); exactly computed distributions have
/// `beta = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    probs: Vec<f64>,
    kind: DistributionKind,
    beta: f64,
}

impl SamplingDistribution {
    /// Normalise nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>, kind: DistributionKind, beta: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DegenerateDistribution("empty support".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::DegenerateDistribution(format!(
                "weight {i} is negative or non-finite"
            )));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {beta} outside (0, 1]")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateDistribution("all weights are zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { probs, kind, beta })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; n], DistributionKind::Uniform, 1.0)
    }

    /// A caller-provided distribution with fidelity `beta`.
    pub fn user_supplied(weights: Vec<f64>, beta: f64) -> Result<Self> {
        Self::from_weights(weights, DistributionKind::UserSupplied, beta)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of indices with positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    pub(crate) fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.probs).expect("validated distribution")
    }

    /// One draw; zero-probability indices are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler().sample(rng)
    }
}

fn column_norms(m: &Matrix) -> Vec<f64> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

fn row_norms(m: &Matrix) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

/// Column-row pair distribution for `A B` with `A` `L x N` and `B` `N x M`.
pub fn cr_distribution(a: &Matrix, b: &Matrix) -> Result<SamplingDistribution> {
    if a.cols() != b.rows() {
        return Err(Error::InvalidInput(format!(
            "A has {} columns but B has {} rows",
            a.cols(),
            b.rows()
        )));
    }
    let weights: Vec<f64> = column_norms(a)
        .into_iter()
        .zip(row_norms(b))
        .map(|(x, y)| x * y)
        .collect();
    SamplingDistribution::from_weights(weights, DistributionKind::CrRows, 1.0)
}

/// Block-pair distribution under the column/row split of `A`/`B` into `k`
/// blocks.
pub fn block_cr_distribution(
    a: &Matrix,
    b: &Matrix,
    k: usize,
    weighting: BlockWeighting,
) -> Result<SamplingDistribution> {
    if a.cols() != b.rows() {
        return Err(Error::InvalidInput(format!(
            "A has {} columns but B has {} rows",
            a.cols(),
            b.rows()
        )));
    }
    let a_blocks = split_cols(a, k)?;
    let b_blocks = split_rows(b, k)?;
    let (kind, power) = match weighting {
        BlockWeighting::Norm => (DistributionKind::BlockCr, 1),
        BlockWeighting::SquaredNorm => (DistributionKind::BlockCrSquared, 2),
    };
    let weights = a_blocks
        .iter()
        .zip(&b_blocks)
        .map(|(x, y)| (x.frobenius_norm() * y.frobenius_norm()).powi(power))
        .collect();
    SamplingDistribution::from_weights(weights, kind, 1.0)
}

/// Leverage scores `l_i = ||U_(i)||^2` of a full-column-rank `N x d` matrix.
pub fn leverage_scores(a: &Matrix) -> Result<Vec<f64>> {
    if a.rows() < a.cols() {
        return Err(Error::InvalidInput(format!(
            "leverage scores need N >= d, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let u = full_column_basis(a)?;
    Ok(row_norms(&u).into_iter().map(|r| r * r).collect())
}

pub fn leverage_distribution(a: &Matrix) -> Result<SamplingDistribution> {
    let d = a.cols() as f64;
    let probs = leverage_scores(a)?.into_iter().map(|l| l / d).collect();
    SamplingDistribution::from_weights(probs, DistributionKind::Leverage, 1.0)
}

/// Block leverage scores over `k` consecutive row blocks.
pub fn block_leverage_distribution(a: &Matrix, k: usize) -> Result<SamplingDistribution> {
    if k == 0 || !a.rows().is_multiple_of(k) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} does not divide N = {}",
            a.rows()
        )));
    }
    let scores = leverage_scores(a)?;
    let tau = a.rows() / k;
    let d = a.cols() as f64;
    let probs = scores.chunks(tau).map(|c| c.iter().sum::<f64>() / d).collect();
    SamplingDistribution::from_weights(probs, DistributionKind::BlockLeverage, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_probs(d: &SamplingDistribution, want: &[f64]) {
        assert_eq!(d.len(), want.len());
        for (g, w) in d.probs().iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{:?} vs {:?}", d.probs(), want);
        }
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cr_examples() {
        let i2 = Matrix::identity(2);
        assert_probs(&cr_distribution(&i2, &i2).unwrap(), &[0.5, 0.5]);

        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_probs(&cr_distribution(&a, &b).unwrap(), &[1.0 / 3.0, 2.0 / 3.0]);

        let bz = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        let d = cr_distribution(&a, &bz).unwrap();
        assert_eq!(d.prob(1), 0.0);
        assert_eq!(d.kind(), DistributionKind::CrRows);
        assert_eq!(d.beta(), 1.0);
    }

    #[test]
    fn cr_degenerate_and_shape_errors() {
        let z = Matrix::zeros(2, 2);
        assert!(matches!(cr_distribution(&z, &z), Err(Error::DegenerateDistribution(_))));
        assert!(matches!(
            cr_distribution(&Matrix::zeros(2, 3), &z),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn leverage_examples() {
        let e1 = Matrix::column(&[1.0, 0.0, 0.0]);
        assert_probs(&leverage_distribution(&e1).unwrap(), &[1.0, 0.0, 0.0]);

        // Orthonormal input: U = A up to rotation, so p_i = ||A_(i)||^2 / d.
        let s = 0.5f64.sqrt();
        let q = Matrix::from_rows(&[vec![s, 0.0], vec![s, 0.0], vec![0.0, 0.6], vec![0.0, 0.8]]);
        assert_probs(&leverage_distribution(&q).unwrap(), &[0.25, 0.25, 0.18, 0.32]);

        let rank_def = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        assert!(matches!(
            leverage_distribution(&rank_def),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn block_leverage_examples() {
        let a = Matrix::from_fn_real(8, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 + 0.5 * j as f64);
        assert_probs(&block_leverage_distribution(&a, 1).unwrap(), &[1.0]);
        let rows = leverage_distribution(&a).unwrap();
        assert_probs(&block_leverage_distribution(&a, 8).unwrap(), rows.probs());
        assert!(block_leverage_distribution(&a, 3).is_err());

        // Orthonormal 8x2, k = 4: Pi_i = ||rows 2i-1, 2i||_F^2 / 2.
        let u = full_column_basis(&a).unwrap();
        let want: Vec<f64> = (0..4)
            .map(|blk| {
                (2 * blk..2 * blk + 2)
                    .flat_map(|r| u.row(r).iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
                    .sum::<f64>()
                    / 2.0
            })
            .collect();
        assert_probs(&block_leverage_distribution(&u, 4).unwrap(), &want);
    }

    #[test]
    fn block_cr_reduces_to_rows_at_unit_width() {
        let a = Matrix::from_fn_real(3, 4, |i, j| (i as f64 - j as f64) * 0.7 + 1.0);
        let b = Matrix::from_fn_real(4, 2, |i, j| (i * j) as f64 + 0.3);
        let rows = cr_distribution(&a, &b).unwrap();
        let blocks = block_cr_distribution(&a, &b, 4, BlockWeighting::Norm).unwrap();
        assert_probs(&blocks, rows.probs());
        assert_eq!(blocks.kind(), DistributionKind::BlockCr);

        let sq = block_cr_distribution(&a, &b, 2, BlockWeighting::SquaredNorm).unwrap();
        assert_eq!(sq.kind(), DistributionKind::BlockCrSquared);
    }

    #[test]
    fn validation() {
        assert!(SamplingDistribution::user_supplied(vec![1.0, -1.0], 1.0).is_err());
        assert!(SamplingDistribution::user_supplied(vec![1.0, 1.0], 0.0).is_err());
        assert!(SamplingDistribution::uniform(0).is_err());
        let d = SamplingDistribution::user_supplied(vec![1.0, 3.0], 0.5).unwrap();
        assert_probs(&d, &[0.25, 0.75]);
        assert_eq!(d.beta(), 0.5);
    }
}
