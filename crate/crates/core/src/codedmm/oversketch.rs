use crate::codedmm::exact::{check_inner, real_pair};
use crate::codedmm::scheme::{CMMScheme, CmmDecoder, Exactness, ServerTask};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::derive_seed;
use crate::sketch::countsketch_operator;

/// OverSketch on an explicit `q x N` sketch `S` whose rows form `q / b`
/// groups of `b`: `A S^T` and `S B` are tiled into `b x b` blocks, and
/// server `(u, v, t)` multiplies tile `(u, t)` of `A S^T` by tile `(t, v)` of
/// `S B`. Output block `(u, v)` is the sum of any `q / b - e` of its tasks.
pub fn oversketch_with_sketch(a: &Matrix, b: &Matrix, sketch: &Matrix, block: usize, e: usize) -> Result<CMMScheme> {
    check_inner(a, b)?;
    let q = sketch.rows();
    if sketch.cols() != a.cols() {
        return Err(Error::InvalidInput(format!(
            "sketch has {} columns, inner dimension is {}",
            sketch.cols(),
            a.cols()
        )));
    }
    if block == 0 || !q.is_multiple_of(block) || !a.rows().is_multiple_of(block) || !b.cols().is_multiple_of(block) {
        return Err(Error::InvalidParameter(format!(
            "block size {block} must divide q = {q}, {} and {}",
            a.rows(),
            b.cols()
        )));
    }
    let d = q / block;
    if e >= d {
        return Err(Error::InvalidParameter(format!("need e < q / b = {d}, got e = {e}")));
    }
    let left = a * &sketch.transpose();
    let right = sketch * b;
    let (bu, bv) = (a.rows() / block, b.cols() / block);
    let mut tasks = Vec::with_capacity(bu * bv * d);
    let mut labels = Vec::with_capacity(bu * bv * d);
    for u in 0..bu {
        for v in 0..bv {
            for t in 0..d {
                tasks.push(ServerTask {
                    left: left.block(u * block, t * block, block, block),
                    right: right.block(t * block, v * block, block, block),
                });
                labels.push((u, v, t));
            }
        }
    }
    Ok(CMMScheme {
        name: "oversketch".into(),
        threshold: bu * bv * (d - e),
        tasks,
        points: None,
        exactness: Exactness::SketchApproximate,
        decoder: CmmDecoder::BlockSum {
            blocks: (bu, bv),
            needed: d - e,
            tasks: labels,
        },
        real_inputs: real_pair(a, b),
        product: a * b,
        sample: None,
    })
}

/// OverSketch with `q / b` independent CountSketches of width `b`, each
/// scaled by `1 / sqrt(q / b - e)` so that any `q / b - e` of them form an
/// unbiased sketch of width `q - e b`.
pub fn oversketch(a: &Matrix, b: &Matrix, q: usize, block: usize, e: usize, seed: u64) -> Result<CMMScheme> {
    if block == 0 || !q.is_multiple_of(block) || q == 0 {
        return Err(Error::InvalidParameter(format!("block size {block} must divide q = {q}")));
    }
    let d = q / block;
    if e >= d {
        return Err(Error::InvalidParameter(format!("need e < q / b = {d}, got e = {e}")));
    }
    let scale = 1.0 / ((d - e) as f64).sqrt();
    let parts: Vec<Matrix> = (0..d)
        .map(|t| {
            countsketch_operator(a.cols(), block, derive_seed(seed, "oversketch", t as u64))
                .map(|s| s.matrix().scale(scale))
        })
        .collect::<Result<_>>()?;
    oversketch_with_sketch(a, b, &Matrix::vstack(&parts)?, block, e)
}

/// Effective sketch width when `e` of the `q / b` groups are dropped.
pub fn oversketch_effective_width(q: usize, block: usize, e: usize) -> usize {
    q - e * block
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::sketch::SketchOperator;

    fn random(r: usize, c: usize, seed: u64) -> Matrix {
        Matrix::standard_normal(r, c, &mut substream(seed, "oversketch-test", 0))
    }

    fn median(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        0.5 * (xs[(xs.len() - 1) / 2] + xs[xs.len() / 2])
    }

    #[test]
    fn identity_sketch_is_exact() {
        let a = random(4, 8, 1);
        let b = random(8, 4, 2);
        let scheme = oversketch_with_sketch(&a, &b, SketchOperator::explicit(Matrix::identity(8)).matrix(), 2, 0).unwrap();
        assert_eq!(scheme.servers(), 2 * 2 * 4);
        let c = scheme.decode(&scheme.compute_all()).unwrap();
        assert!(c.relative_error(&(&a * &b)) < 1e-12);
    }

    #[test]
    fn full_responses_match_monolithic_product() {
        let a = random(4, 16, 3);
        let b = random(16, 4, 4);
        let scheme = oversketch(&a, &b, 8, 2, 0, 5).unwrap();
        let parts: Vec<Matrix> = (0..4)
            .map(|t| countsketch_operator(16, 2, derive_seed(5, "oversketch", t)).unwrap().matrix().scale(0.5))
            .collect();
        let s = Matrix::vstack(&parts).unwrap();
        let want = &(&a * &s.transpose()) * &(&s * &b);
        assert!(scheme.decode(&scheme.compute_all()).unwrap().relative_error(&want) < 1e-10);
    }

    #[test]
    fn per_block_threshold() {
        let a = random(4, 16, 6);
        let b = random(16, 4, 7);
        let scheme = oversketch(&a, &b, 8, 2, 1, 8).unwrap();
        // Tasks for block (0, 0) are servers 0..4; drop two of them.
        let ids: Vec<usize> = (2..16).collect();
        assert!(!scheme.can_decode(&ids));
        let out: Vec<_> = ids.iter().map(|&i| scheme.compute(i)).collect();
        assert!(matches!(scheme.decode(&out), Err(Error::InsufficientResponses { needed: 3, got: 2 })));
        let ids: Vec<usize> = (1..16).collect();
        assert!(scheme.can_decode(&ids));
        assert!(oversketch(&a, &b, 8, 3, 0, 1).is_err());
        assert!(oversketch(&a, &b, 8, 2, 4, 1).is_err());
    }

    #[test]
    fn one_straggler_per_block_matches_reduced_width() {
        let a = random(4, 32, 9);
        let b = random(32, 4, 10);
        let ab = &a * &b;
        let (q, blk) = (16, 4);
        let mut with_stragglers = Vec::new();
        let mut reduced = Vec::new();
        for seed in 0..200 {
            let scheme = oversketch(&a, &b, q, blk, 1, seed).unwrap();
            let d = q / blk;
            // Drop task t = seed mod d in every output block.
            let out: Vec<_> = (0..scheme.servers())
                .filter(|i| i % d != (seed as usize) % d)
                .map(|i| scheme.compute(i))
                .collect();
            with_stragglers.push((&scheme.decode(&out).unwrap() - &ab).frobenius_norm());
            let plain = oversketch(&a, &b, oversketch_effective_width(q, blk, 1), blk, 0, seed + 1000).unwrap();
            reduced.push((&plain.decode(&plain.compute_all()).unwrap() - &ab).frobenius_norm());
        }
        let (m1, m0) = (median(with_stragglers), median(reduced));
        assert!(m1 <= 1.5 * m0 && m0 <= 1.5 * m1, "{m1} vs {m0}");
    }
}
