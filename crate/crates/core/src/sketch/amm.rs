//! Approximate matrix multiplication and sketch quality meters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{full_column_basis, spectral_norm, Matrix};
use crate::rng::derive_seed;
use crate::sketch::distribution::cr_distribution;
use crate::sketch::operator::{row_sampling_sketch, SketchOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    Spectral,
    Frobenius,
}

impl NormKind {
    pub fn of(self, m: &Matrix) -> f64 {
        match self {
            NormKind::Spectral => spectral_norm(m),
            NormKind::Frobenius => m.frobenius_norm(),
        }
    }
}

/// CR sampling estimator for `A^H B` with both operands presented `N x L`
/// and `N x M`: returns `(S A)^H (S B)`.
pub fn basic_matrix_multiplication(a: &Matrix, b: &Matrix, q: usize, seed: u64) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::InvalidInput(format!(
            "operands must share N rows, got {} and {}",
            a.rows(),
            b.rows()
        )));
    }
    let dist = cr_distribution(&a.adjoint(), b)?;
    let s = row_sampling_sketch(&dist, q, seed)?;
    Ok(&s.apply(a)?.adjoint() * &s.apply(b)?)
}

/// Same estimator in the usual orientation: `A` is `L x N`, `B` is `N x M`
/// and the result approximates `A B`.
pub fn approximate_product(a: &Matrix, b: &Matrix, q: usize, seed: u64) -> Result<Matrix> {
    basic_matrix_multiplication(&a.adjoint(), b, q, seed)
}

/// `A S^T S B` for an `L x N` `A` and `N x M` `B`.
pub fn sketched_product(a: &Matrix, b: &Matrix, s: &SketchOperator) -> Result<Matrix> {
    let sa = s.apply(&a.adjoint())?;
    let sb = s.apply(b)?;
    Ok(&sa.adjoint() * &sb)
}

/// `||A B - A S^T S B||` in the requested norm.
pub fn amm_error(a: &Matrix, b: &Matrix, s: &SketchOperator, norm: NormKind) -> Result<f64> {
    let exact = a.try_matmul(b)?;
    let approx = sketched_product(a, b, s)?;
    Ok(norm.of(&(&exact - &approx)))
}

/// Subspace-embedding distortion `||I - (S U)^H (S U)||_2` for an orthonormal
/// basis `U` of the column space of `A`.
pub fn se_error(s: &SketchOperator, a: &Matrix) -> Result<f64> {
    let u = full_column_basis(a)?;
    let su = s.apply(&u)?;
    let gram = &su.adjoint() * &su;
    Ok(spectral_norm(&(&Matrix::identity(u.cols()) - &gram)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub q: usize,
    pub successes: usize,
    pub trials: usize,
    pub frequency: f64,
    pub std_error: f64,
}

/// Empirical check of the spectral-norm CR sampling guarantee.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub epsilon: f64,
    pub delta: f64,
    pub rates: Vec<SuccessRate>,
    /// Frequencies never drop by more than the noise band between
    /// consecutive grid points.
    pub monotone: bool,
    /// First `q` whose success frequency reaches `1 - delta`.
    pub first_q_meeting_target: Option<usize>,
}

/// Width of the binomial noise band, in standard errors.
pub const NOISE_BAND_Z: f64 = 3.0;

fn binomial_se(freq: f64, trials: usize) -> f64 {
    let n = trials as f64;
    // Clamp away from 0 and 1 so that a degenerate frequency still carries
    // a nonzero band.
    let p = freq.clamp(0.5 / n, 1.0 - 0.5 / n);
    (p * (1.0 - p) / n).sqrt()
}

/// For every `q` in the grid, the frequency over `trials` seeds of
/// `||A B - A S^T S B||_2 / (||A||_2 ||B||_2) <= epsilon` with `S` drawn by CR
/// row sampling.
pub fn theorem1_validate(
    a: &Matrix,
    b: &Matrix,
    epsilon: f64,
    delta: f64,
    q_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Theorem1Report> {
    if q_grid.is_empty() || q_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("q grid must be nonempty and ascending".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let exact = a.try_matmul(b)?;
    let scale = spectral_norm(a) * spectral_norm(b);
    if scale == 0.0 {
        return Err(Error::DegenerateDistribution("A or B is zero".into()));
    }
    let dist = cr_distribution(a, b)?;
    let mut rates = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let mut successes = 0;
        for t in 0..trials {
            let s = row_sampling_sketch(&dist, q, derive_seed(seed, "theorem1", (q * trials + t) as u64))?;
            let approx = sketched_product(a, b, &s)?;
            if spectral_norm(&(&exact - &approx)) / scale <= epsilon {
                successes += 1;
            }
        }
        let frequency = successes as f64 / trials as f64;
        rates.push(SuccessRate {
            q,
            successes,
            trials,
            frequency,
            std_error: binomial_se(frequency, trials),
        });
    }
    let monotone = rates.windows(2).all(|w| {
        let band = NOISE_BAND_Z * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].frequency + band >= w[0].frequency
    });
    let first_q_meeting_target = rates
        .iter()
        .find(|r| r.frequency >= 1.0 - delta)
        .map(|r| r.q);
    Ok(Theorem1Report {
        epsilon,
        delta,
        rates,
        monotone,
        first_q_meeting_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::sketch::operator::{srht, countsketch_from_hash};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = substream(seed, "amm-test", 0);
        Matrix::from_fn_real(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn single_pair_is_exact() {
        let a = Matrix::row_vector(&[2.0, -1.0]);
        let b = Matrix::row_vector(&[3.0]);
        let est = basic_matrix_multiplication(&a, &b, 4, 1).unwrap();
        let exact = &a.adjoint() * &b;
        assert!(est.relative_error(&exact) < 1e-14);
    }

    #[test]
    fn identity_estimator_is_unbiased() {
        let i4 = Matrix::identity(4);
        let trials = 10_000;
        let mut acc = Matrix::zeros(4, 4);
        for seed in 0..trials {
            acc = &acc + &basic_matrix_multiplication(&i4, &i4, 4, seed).unwrap();
        }
        let mean = acc.scale(1.0 / trials as f64);
        assert!((&mean - &i4).max_abs() < 0.05);
    }

    #[test]
    fn amm_error_edge_cases() {
        let a = random(5, 8, 1);
        let b = random(8, 3, 2);
        let orth = srht(8, 8, 4).unwrap();
        assert!(amm_error(&a, &b, &orth, NormKind::Frobenius).unwrap() < 1e-12);
        let zero = SketchOperator::explicit(Matrix::zeros(3, 8));
        let ab = &a * &b;
        for norm in [NormKind::Frobenius, NormKind::Spectral] {
            let e = amm_error(&a, &b, &zero, norm).unwrap();
            assert!((e - norm.of(&ab)).abs() < 1e-12);
        }
    }

    #[test]
    fn amm_error_matches_direct_recomputation() {
        let a = random(8, 8, 3);
        let b = random(8, 8, 4);
        let s = countsketch_from_hash(4, vec![0, 1, 2, 3, 0, 1, 2, 3], vec![1, -1, 1, 1, -1, -1, 1, -1]);
        // Oracle: dense A S^T S B.
        let st = s.matrix().transpose();
        let direct = &(&(&a * &st) * s.matrix()) * &b;
        let want = (&(&a * &b) - &direct).frobenius_norm();
        let got = amm_error(&a, &b, &s, NormKind::Frobenius).unwrap();
        assert!((got - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn se_error_definition_cases() {
        let a = random(8, 3, 5);
        let full = srht(8, 8, 6).unwrap();
        assert!(se_error(&full, &a).unwrap() < 1e-12);
        let doubled = SketchOperator::explicit(full.matrix().scale(2.0));
        assert!((se_error(&doubled, &a).unwrap() - 3.0).abs() < 1e-12);
        let rank_def = Matrix::hstack(&[a.clone(), a.select_cols(&[0])]).unwrap();
        assert!(matches!(se_error(&full, &rank_def), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn theorem1_trivial_delta_and_validation() {
        let a = random(6, 8, 7);
        let b = random(8, 6, 8);
        let r = theorem1_validate(&a, &b, 0.5, 1.0, &[2, 4], 20, 1).unwrap();
        assert_eq!(r.first_q_meeting_target, Some(2));
        assert!(theorem1_validate(&a, &b, 0.5, 0.1, &[4, 2], 20, 1).is_err());
        assert!(theorem1_validate(&a, &b, 0.5, 0.1, &[], 20, 1).is_err());
    }

    #[test]
    fn theorem1_large_q_succeeds() {
        let a = random(8, 16, 9);
        let b = random(16, 8, 10);
        let r = theorem1_validate(&a, &b, 0.5, 0.05, &[4, 16, 1024], 100, 2).unwrap();
        assert!(r.monotone);
        assert_eq!(r.rates.last().unwrap().frequency, 1.0);
    }
}
