use crate::error::{Error, Result};
use crate::linalg::matrix::{Matrix, Scalar};

/// LU factorisation with partial pivoting, `P A = L U`.
///
/// Sized for the small Vandermonde systems the decoders solve (n <= 64).
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    // L below the diagonal (unit diagonal implied), U on and above.
    factors: Vec<Scalar>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut f: Vec<Scalar> = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = f64::EPSILON * (n as f64) * a.max_abs().max(f64::MIN_POSITIVE);

        for col in 0..n {
            let (pivot_row, pivot_mag) = (col..n)
                .map(|r| (r, f[r * n + col].norm()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_mag <= tiny {
                return Err(Error::SingularSystem(format!("zero pivot in column {col}")));
            }
            if pivot_row != col {
                for j in 0..n {
                    f.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = f[col * n + col];
            for r in col + 1..n {
                let factor = f[r * n + col] / pivot;
                f[r * n + col] = factor;
                if factor.norm_sqr() == 0.0 {
                    continue;
                }
                for j in col + 1..n {
                    let upper = f[col * n + j];
                    f[r * n + j] -= factor * upper;
                }
            }
        }
        Ok(Lu { n, factors: f, perm })
    }

    /// Solve `A x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &[Scalar]) -> Vec<Scalar> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut y: Vec<Scalar> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.factors[i * n + j];
                let yj = y[j];
                y[i] -= l * yj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.factors[i * n + j];
                let yj = y[j];
                y[i] -= u * yj;
            }
            y[i] /= self.factors[i * n + i];
        }
        y
    }

    /// Solve `A X = B` column by column.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows(), self.n, "rhs row mismatch");
        let mut out = Matrix::zeros(self.n, b.cols());
        for c in 0..b.cols() {
            let rhs: Vec<Scalar> = (0..self.n).map(|r| b.get(r, c)).collect();
            for (r, v) in self.solve_vec(&rhs).into_iter().enumerate() {
                out.set(r, c, v);
            }
        }
        out
    }
}
