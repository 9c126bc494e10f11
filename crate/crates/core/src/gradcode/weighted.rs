use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcode::brs::brs_scheme;
use crate::gradcode::scheme::GCScheme;
use crate::linalg::{split_rows, EvalPoints, Matrix, Scalar};
use crate::sketch::{block_leverage_distribution, sample_until_r_distinct};

/// Weighted gradient code over `r` leverage-sampled data blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGc {
    /// BRS code with `r` partitions and encoding `G diag(weights)`.
    pub scheme: GCScheme,
    /// Sampled block indices, in order of first draw.
    pub blocks: Vec<usize>,
    /// Draw count of each sampled block.
    pub weights: Vec<usize>,
    /// Sampled blocks of `A`, each scaled by `1 / sqrt(r * prob)`.
    pub a_blocks: Vec<Matrix>,
    pub b_blocks: Vec<Matrix>,
}

impl WeightedGc {
    /// Stacked compressed data matrix.
    pub fn compressed_a(&self) -> Matrix {
        Matrix::vstack(&self.a_blocks).expect("blocks share a width")
    }

    pub fn compressed_b(&self) -> Matrix {
        Matrix::vstack(&self.b_blocks).expect("blocks share a width")
    }
}

/// Sample `r` distinct row blocks of `(A, b)` by block leverage scores and
/// encode them with a BRS code whose columns are weighted by the draw counts.
pub fn weighted_gc(
    a: &Matrix,
    b: &Matrix,
    k: usize,
    r: usize,
    s: usize,
    points: &EvalPoints,
    seed: u64,
) -> Result<WeightedGc> {
    if a.rows() != b.rows() {
        return Err(Error::InvalidInput(format!(
            "A has {} rows but b has {}",
            a.rows(),
            b.rows()
        )));
    }
    if r == 0 || r > k {
        return Err(Error::InvalidParameter(format!("need 1 <= r <= k, got r = {r}, k = {k}")));
    }
    let dist = block_leverage_distribution(a, k)?;
    let sample = sample_until_r_distinct(&dist, r, seed)?;
    let a_parts = split_rows(a, k)?;
    let b_parts = split_rows(b, k)?;
    let scale = |j: usize| 1.0 / (r as f64 * dist.prob(j)).sqrt();
    let a_blocks = sample.indices.iter().map(|&j| a_parts[j].scale(scale(j))).collect();
    let b_blocks = sample.indices.iter().map(|&j| b_parts[j].scale(scale(j))).collect();

    let mut scheme = brs_scheme(points.len(), r, s, points)?;
    let weights: Vec<f64> = sample.weights.iter().map(|&w| w as f64).collect();
    let mut g = scheme.g.clone();
    for i in 0..g.rows() {
        for (j, &w) in weights.iter().enumerate() {
            g.set(i, j, g.get(i, j) * Scalar::from(w));
        }
    }
    scheme.g = g;
    scheme.target = weights;
    scheme.name = "weighted-brs".into();
    Ok(WeightedGc {
        scheme,
        blocks: sample.indices,
        weights: sample.weights,
        a_blocks,
        b_blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcode::scheme::gc_max_error;
    use crate::linalg::roots_of_unity;
    use crate::rng::substream;

    fn instance(n: usize, d: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = substream(seed, "weighted-gc-test", 0);
        (Matrix::standard_normal(n, d, &mut rng), Matrix::standard_normal(n, 1, &mut rng))
    }

    fn ls_gradient(a: &Matrix, b: &Matrix, x: &Matrix) -> Matrix {
        (&a.adjoint() * &(&(a * x) - b)).scale(2.0)
    }

    #[test]
    fn weighted_target_is_met_on_every_set() {
        let (a, b) = instance(32, 2, 1);
        let w = weighted_gc(&a, &b, 8, 4, 2, &roots_of_unity(8).unwrap(), 3).unwrap();
        assert_eq!(w.scheme.target().len(), 4);
        assert!(gc_max_error(&w.scheme, 2).unwrap().error <= 1e-8);
    }

    #[test]
    fn decoded_gradient_matches_sketched_objective() {
        let (a, b) = instance(32, 2, 2);
        let x = Matrix::column(&[0.3, -1.1]);
        for seed in 0..5 {
            let w = weighted_gc(&a, &b, 8, 4, 2, &roots_of_unity(8).unwrap(), seed).unwrap();
            let partial: Vec<Matrix> =
                w.a_blocks.iter().zip(&w.b_blocks).map(|(ab, bb)| ls_gradient(ab, bb, &x)).collect();
            let g = w.scheme.encoding();
            let responders = [0, 2, 3, 5, 6, 7];
            let dv = w.scheme.decoding_vector(&responders).unwrap();
            let mut decoded = Matrix::zeros(2, 1);
            for &i in &responders {
                let mut sent = Matrix::zeros(2, 1);
                for (j, p) in partial.iter().enumerate() {
                    sent.axpy(g.get(i, j), p);
                }
                decoded.axpy(dv.a[i], &sent);
            }
            // Oracle: explicit weighted row-sampling sketch of the full data.
            let rows_per_block = 32 / 8;
            let dist = block_leverage_distribution(&a, 8).unwrap();
            let mut sk = Matrix::zeros(4 * rows_per_block, 32);
            for (t, (&blk, &mult)) in w.blocks.iter().zip(&w.weights).enumerate() {
                let v = (mult as f64 / (4.0 * dist.prob(blk))).sqrt();
                for u in 0..rows_per_block {
                    sk.set(t * rows_per_block + u, blk * rows_per_block + u, v.into());
                }
            }
            let want = ls_gradient(&(&sk * &a), &(&sk * &b), &x);
            assert!(decoded.relative_error(&want) <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn unit_weights_keep_plain_code() {
        let (a, b) = instance(18, 2, 4);
        let points = roots_of_unity(6).unwrap();
        for seed in 0..50 {
            let w = weighted_gc(&a, &b, 3, 3, 2, &points, seed).unwrap();
            if w.weights.iter().all(|&c| c == 1) {
                let plain = brs_scheme(6, 3, 2, &points).unwrap();
                assert_eq!(w.scheme.encoding(), plain.encoding());
                return;
            }
        }
        panic!("no seed produced unit weights");
    }
}
