use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::substream;
use crate::sketch::distribution::SamplingDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SketchVariant {
    RowSampling,
    CountSketch,
    Gaussian,
    Srht,
    /// A caller-supplied matrix.
    Explicit,
}

/// Structured description of a sketch, next to its dense realisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SketchStructure {
    RowSampling { indices: Vec<usize>, scales: Vec<f64> },
    CountSketch { buckets: Vec<usize>, signs: Vec<i8> },
    Gaussian { seed: u64 },
    Srht { sampled_rows: Vec<usize>, signs: Vec<i8>, padded_dim: usize },
    Explicit,
}

/// A `q x N` sketching matrix `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchOperator {
    q: usize,
    n: usize,
    structure: SketchStructure,
    realization: Matrix,
}

impl SketchOperator {
    /// Wrap an arbitrary matrix as a sketch.
    pub fn explicit(s: Matrix) -> Self {
        Self {
            q: s.rows(),
            n: s.cols(),
            structure: SketchStructure::Explicit,
            realization: s,
        }
    }

    pub fn sketch_dim(&self) -> usize {
        self.q
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> SketchVariant {
        match self.structure {
            SketchStructure::RowSampling { .. } => SketchVariant::RowSampling,
            SketchStructure::CountSketch { .. } => SketchVariant::CountSketch,
            SketchStructure::Gaussian { .. } => SketchVariant::Gaussian,
            SketchStructure::Srht { .. } => SketchVariant::Srht,
            SketchStructure::Explicit => SketchVariant::Explicit,
        }
    }

    pub fn structure(&self) -> &SketchStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &Matrix {
        &self.realization
    }

    /// `S A` for an `N x d` matrix `A`.
    pub fn apply(&self, a: &Matrix) -> Result<Matrix> {
        if a.rows() != self.n {
            return Err(Error::InvalidInput(format!(
                "sketch expects {} rows, got {}",
                self.n,
                a.rows()
            )));
        }
        match &self.structure {
            SketchStructure::RowSampling { indices, scales } => {
                let mut out = a.select_rows(indices);
                for (r, &s) in scales.iter().enumerate() {
                    for c in 0..out.cols() {
                        let v = out.get(r, c) * s;
                        out.set(r, c, v);
                    }
                }
                Ok(out)
            }
            SketchStructure::CountSketch { buckets, signs } => {
                let mut out = Matrix::zeros(self.q, a.cols());
                for (i, (&h, &s)) in buckets.iter().zip(signs).enumerate() {
                    for c in 0..a.cols() {
                        let v = out.get(h, c) + a.get(i, c) * f64::from(s);
                        out.set(h, c, v);
                    }
                }
                Ok(out)
            }
            _ => self.realization.try_matmul(a),
        }
    }

    /// `S^T S` (real sketches, so the transpose is the adjoint).
    pub fn gram(&self) -> Matrix {
        &self.realization.transpose() * &self.realization
    }
}

/// Row sampling with replacement: `q` draws from `dist`, row `j` holding
/// `1 / sqrt(q pi_{i_j})` at column `i_j`.
pub fn row_sampling_sketch(dist: &SamplingDistribution, q: usize, seed: u64) -> Result<SketchOperator> {
    if q == 0 {
        return Err(Error::InvalidParameter("sketch dimension q must be >= 1".into()));
    }
    let mut rng = substream(seed, "row-sampling", 0);
    let sampler = dist.sampler();
    let indices: Vec<usize> = (0..q)
        .map(|_| rand::distr::Distribution::sample(&sampler, &mut rng))
        .collect();
    let scales: Vec<f64> = indices
        .iter()
        .map(|&i| 1.0 / (q as f64 * dist.prob(i)).sqrt())
        .collect();
    let n = dist.len();
    let realization = Matrix::from_fn_real(q, n, |r, c| if c == indices[r] { scales[r] } else { 0.0 });
    Ok(SketchOperator {
        q,
        n,
        structure: SketchStructure::RowSampling { indices, scales },
        realization,
    })
}

/// CountSketch with `q` buckets for an ambient dimension `n`.
pub fn countsketch_operator(n: usize, q: usize, seed: u64) -> Result<SketchOperator> {
    if q == 0 {
        return Err(Error::InvalidParameter("bucket count q must be >= 1".into()));
    }
    let mut rng = substream(seed, "countsketch", 0);
    let mut buckets = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for _ in 0..n {
        buckets.push(rng.random_range(0..q));
        signs.push(if rng.random::<bool>() { 1i8 } else { -1i8 });
    }
    Ok(countsketch_from_hash(q, buckets, signs))
}

/// CountSketch from an explicit hash and sign assignment.
pub fn countsketch_from_hash(q: usize, buckets: Vec<usize>, signs: Vec<i8>) -> SketchOperator {
    assert_eq!(buckets.len(), signs.len(), "one sign per input row");
    assert!(buckets.iter().all(|&h| h < q), "bucket out of range");
    let n = buckets.len();
    let realization = Matrix::from_fn_real(q, n, |r, c| {
        if buckets[c] == r {
            f64::from(signs[c])
        } else {
            0.0
        }
    });
    SketchOperator {
        q,
        n,
        structure: SketchStructure::CountSketch { buckets, signs },
        realization,
    }
}

/// Hash every row of `A` into one of `q` buckets with a random sign.
pub fn countsketch(a: &Matrix, q: usize, seed: u64) -> Result<(Matrix, SketchOperator)> {
    let op = countsketch_operator(a.rows(), q, seed)?;
    Ok((op.apply(a)?, op))
}

/// Gaussian sketch, i.i.d. `N(0, 1) / sqrt(q)` entries.
pub fn gaussian_sketch(q: usize, n: usize, seed: u64) -> Result<SketchOperator> {
    if q == 0 {
        return Err(Error::InvalidParameter("sketch dimension q must be >= 1".into()));
    }
    let mut rng = substream(seed, "gaussian", 0);
    let scale = 1.0 / (q as f64).sqrt();
    let realization = Matrix::from_fn_real(q, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    Ok(SketchOperator {
        q,
        n,
        structure: SketchStructure::Gaussian { seed },
        realization,
    })
}

/// Entry `(i, j)` of the normalised Hadamard matrix of order `p`.
pub fn hadamard_entry(p: usize, i: usize, j: usize) -> f64 {
    let sign = if (i & j).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (p as f64).sqrt()
}

/// Subsampled randomised Hadamard transform `S = Omega H D`.
///
/// `N` that is not a power of two is zero-padded to the next power `P`; the
/// realisation keeps the first `N` columns, so `S x = S_P [x; 0]`.
pub fn srht(q: usize, n: usize, seed: u64) -> Result<SketchOperator> {
    if q == 0 || n == 0 {
        return Err(Error::InvalidParameter("srht needs q, N >= 1".into()));
    }
    if q > n {
        return Err(Error::InvalidParameter(format!("srht needs q <= N, got q = {q} > {n}")));
    }
    let p = n.next_power_of_two();
    let mut rng = substream(seed, "srht", 0);
    let signs: Vec<i8> = (0..p).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let sampled_rows = index::sample(&mut rng, p, q).into_vec();
    let omega = (p as f64 / q as f64).sqrt();
    let realization = Matrix::from_fn_real(q, n, |r, c| {
        omega * hadamard_entry(p, sampled_rows[r], c) * f64::from(signs[c])
    });
    Ok(SketchOperator {
        q,
        n,
        structure: SketchStructure::Srht {
            sampled_rows,
            signs,
            padded_dim: p,
        },
        realization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Entrywise Monte Carlo mean of `S^T S` over `trials` seeds.
    fn mean_gram(trials: u64, build: impl Fn(u64) -> SketchOperator) -> Matrix {
        let mut acc: Option<Matrix> = None;
        for seed in 0..trials {
            let g = build(seed).gram();
            acc = Some(match acc {
                None => g,
                Some(a) => &a + &g,
            });
        }
        acc.unwrap().scale(1.0 / trials as f64)
    }

    fn max_dev_from_identity(m: &Matrix) -> f64 {
        (m - &Matrix::identity(m.rows())).max_abs()
    }

    #[test]
    fn row_sampling_point_mass() {
        let dist = SamplingDistribution::user_supplied(vec![0.0, 1.0, 0.0], 1.0).unwrap();
        let s = row_sampling_sketch(&dist, 3, 9).unwrap();
        let SketchStructure::RowSampling { indices, scales } = s.structure() else { panic!() };
        assert_eq!(indices, &vec![1, 1, 1]);
        for &v in scales {
            assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        // one nonzero per row
        for r in 0..3 {
            assert_eq!(s.matrix().row(r).iter().filter(|z| z.norm() > 0.0).count(), 1);
        }
        assert!(row_sampling_sketch(&dist, 0, 1).is_err());
    }

    #[test]
    fn row_sampling_is_reproducible() {
        let dist = SamplingDistribution::uniform(4).unwrap();
        let a = row_sampling_sketch(&dist, 4, 42).unwrap();
        let b = row_sampling_sketch(&dist, 4, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn row_sampling_is_isotropic() {
        let dist = SamplingDistribution::uniform(4).unwrap();
        let mean = mean_gram(10_000, |s| row_sampling_sketch(&dist, 8, s).unwrap());
        assert!(max_dev_from_identity(&mean) < 0.05);
    }

    #[test]
    fn countsketch_preserves_norm_without_collisions() {
        let a = Matrix::row_vector(&[3.0, -4.0]);
        let (sa, op) = countsketch(&a, 5, 3).unwrap();
        assert_eq!(sa.shape(), (5, 2));
        assert!((sa.frobenius_norm() - 5.0).abs() < 1e-12);
        assert_eq!(op.variant(), SketchVariant::CountSketch);

        // Injective hash: signed row embedding.
        let a = Matrix::from_fn_real(3, 2, |i, j| (i + 2 * j) as f64 + 1.0);
        let op = countsketch_from_hash(4, vec![2, 0, 3], vec![1, -1, -1]);
        let sa = op.apply(&a).unwrap();
        assert!((sa.frobenius_norm() - a.frobenius_norm()).abs() < 1e-12);
        assert!((&sa - &(op.matrix() * &a)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn countsketch_one_signed_entry_per_column_and_isotropic() {
        let op = countsketch_operator(6, 3, 1).unwrap();
        for c in 0..6 {
            let nz: Vec<f64> = (0..3).map(|r| op.matrix().re(r, c)).filter(|v| *v != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert_eq!(nz[0].abs(), 1.0);
        }
        let mean = mean_gram(10_000, |s| countsketch_operator(4, 4, s).unwrap());
        assert!(max_dev_from_identity(&mean) < 0.05);
    }

    #[test]
    fn gaussian_isotropy_reproducibility_concentration() {
        assert_eq!(gaussian_sketch(4, 3, 8).unwrap(), gaussian_sketch(4, 3, 8).unwrap());
        let mean = mean_gram(10_000, |s| gaussian_sketch(8, 4, s).unwrap());
        assert!(max_dev_from_identity(&mean) < 0.05);

        let inside = (0..1000)
            .filter(|&s| {
                let g = gaussian_sketch(64, 4, s).unwrap();
                let col: f64 = (0..64).map(|r| g.matrix().re(r, 0).powi(2)).sum();
                (0.5..=1.5).contains(&col)
            })
            .count();
        assert!(inside >= 950, "{inside}");
    }

    #[test]
    fn srht_construction() {
        assert!(matches!(srht(5, 4, 0), Err(Error::InvalidParameter(_))));

        // N = 2: rows of the normalised 2x2 Hadamard, scaled by sqrt(N/q).
        let s = srht(2, 2, 3).unwrap();
        let SketchStructure::Srht { sampled_rows, signs, padded_dim } = s.structure() else { panic!() };
        assert_eq!(*padded_dim, 2);
        let h = [[1.0, 1.0], [1.0, -1.0]];
        for r in 0..2 {
            for c in 0..2 {
                let want = h[sampled_rows[r]][c] / 2f64.sqrt() * f64::from(signs[c]);
                assert!((s.matrix().re(r, c) - want).abs() < 1e-15);
            }
        }

        // Entry magnitude 1/sqrt(q), also with padding.
        let s = srht(3, 6, 4).unwrap();
        for z in s.matrix().as_slice() {
            assert!((z.norm() - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn srht_full_sampling_is_orthogonal() {
        let s = srht(8, 8, 12).unwrap();
        assert!(max_dev_from_identity(&s.gram()) < 1e-12);
    }

    #[test]
    fn srht_is_isotropic() {
        let mean = mean_gram(10_000, |s| srht(2, 4, s).unwrap());
        assert!(max_dev_from_identity(&mean) < 0.05);
        let mean = mean_gram(10_000, |s| srht(3, 6, s).unwrap());
        assert!(max_dev_from_identity(&mean) < 0.05);
    }
}
