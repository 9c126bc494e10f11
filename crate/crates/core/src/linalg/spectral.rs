//! SVD- and eigen-based utilities, backed by nalgebra.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;

fn rank_tolerance(m: &Matrix, sigma_max: f64) -> f64 {
    (m.rows().max(m.cols()) as f64) * f64::EPSILON * sigma_max
}

/// Singular values, descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numerical rank.
pub fn rank(m: &Matrix) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    let tol = rank_tolerance(m, top);
    s.iter().filter(|&&x| x > tol).count()
}

/// Orthonormal basis of the column space; one column per unit of rank.
pub fn orthonormal_basis(m: &Matrix) -> Matrix {
    if m.rows() == 0 || m.cols() == 0 {
        return Matrix::zeros(m.rows(), 0);
    }
    let svd = m.to_nalgebra().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    // nalgebra does not sort singular values; pick columns above tolerance.
    let top = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = rank_tolerance(m, top);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top > 0.0 && svd.singular_values[i] > tol)
        .collect();
    let u = Matrix::from_nalgebra(&u, m.field());
    u.select_cols(&keep)
}

/// Orthonormal basis for a matrix required to have full column rank.
pub fn full_column_basis(m: &Matrix) -> Result<Matrix> {
    let u = orthonormal_basis(m);
    if u.cols() < m.cols() {
        return Err(Error::RankDeficient {
            rank: u.cols(),
            expected: m.cols(),
        });
    }
    Ok(u)
}

/// Moore-Penrose pseudoinverse.
pub fn pseudoinverse(m: &Matrix) -> Matrix {
    if m.rows() == 0 || m.cols() == 0 {
        return Matrix::zeros(m.cols(), m.rows());
    }
    let svd = m.to_nalgebra().svd(true, true);
    let top = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = rank_tolerance(m, top).max(f64::MIN_POSITIVE);
    let pinv = svd.pseudo_inverse(tol).expect("both singular bases requested");
    Matrix::from_nalgebra(&pinv, m.field())
}

/// Eigenvalues of a symmetric (Hermitian) matrix, sorted descending.
pub fn sym_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let asym = (m - &m.adjoint()).max_abs();
    if asym > 1e-10 * m.max_abs().max(1.0) {
        return Err(Error::InvalidInput(format!("matrix is not Hermitian (defect {asym:e})")));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.to_nalgebra())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// `|| M^H M - I ||_2`, the deviation of the columns from orthonormality.
pub fn orthonormality_defect(u: &Matrix) -> f64 {
    let gram = &u.adjoint() * u;
    spectral_norm(&(&gram - &Matrix::identity(u.cols())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = crate::rng::substream(seed, "test-matrix", 0);
        Matrix::from_fn_real(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn identity_and_diagonal() {
        let i3 = Matrix::identity(3);
        assert!((spectral_norm(&i3) - 1.0).abs() < 1e-12);
        let ev = sym_eigenvalues(&i3).unwrap();
        assert!(ev.iter().all(|&x| (x - 1.0).abs() < 1e-12));

        let d = Matrix::diag(&[3.0, -2.0]);
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-12);
        let ev = sym_eigenvalues(&d).unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_reject_bad_input() {
        assert!(sym_eigenvalues(&Matrix::zeros(2, 3)).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(sym_eigenvalues(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pseudoinverse_moore_penrose_identities() {
        let m = random(20, 5, 11);
        let p = pseudoinverse(&m);
        let mpm = &(&m * &p) * &m;
        assert!((&mpm - &m).frobenius_norm() < 1e-8);
        let pmp = &(&p * &m) * &p;
        assert!((&pmp - &p).frobenius_norm() < 1e-8);
        let mp = &m * &p;
        assert!((&mp - &mp.adjoint()).frobenius_norm() < 1e-8);
        let pm = &p * &m;
        assert!((&pm - &pm.adjoint()).frobenius_norm() < 1e-8);
    }

    #[test]
    fn basis_is_orthonormal_and_rank_checked() {
        let m = random(30, 4, 5);
        let u = full_column_basis(&m).unwrap();
        assert_eq!(u.shape(), (30, 4));
        assert!(orthonormality_defect(&u) <= 1e-10);

        let dup = Matrix::hstack(&[m.clone(), m.select_cols(&[0])]).unwrap();
        assert_eq!(rank(&dup), 4);
        assert!(matches!(
            full_column_basis(&dup),
            Err(Error::RankDeficient { rank: 4, expected: 5 })
        ));
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let m = random(12, 7, 3);
        let gram = &m.adjoint() * &m;
        let mut v = Matrix::column(&[1.0; 7]);
        for _ in 0..500 {
            v = &gram * &v;
            v = v.scale(1.0 / v.frobenius_norm());
        }
        let lambda = (&m * &v).frobenius_norm();
        assert!((spectral_norm(&m) - lambda).abs() <= 1e-8 * lambda);
    }
}
