//! Evaluation points, Vandermonde matrices and Lagrange interpolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{Matrix, Scalar};

/// Points closer than this are treated as coincident.
const DISTINCT_TOL: f64 = 1e-12;

fn first_duplicate(points: &[Scalar]) -> Option<(usize, usize)> {
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if (points[a] - points[b]).norm() <= DISTINCT_TOL {
                return Some((a, b));
            }
        }
    }
    None
}

/// Ordered, pairwise distinct, nonzero evaluation points; point `i` belongs
/// to server `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoints {
    points: Vec<Scalar>,
}

impl EvalPoints {
    pub fn new(points: Vec<Scalar>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("no evaluation points".into()));
        }
        if let Some(pos) = points.iter().position(|z| z.norm() <= DISTINCT_TOL) {
            return Err(Error::InvalidParameter(format!("evaluation point {pos} is zero")));
        }
        if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite evaluation point".into()));
        }
        if let Some((a, b)) = first_duplicate(&points) {
            return Err(Error::InvalidParameter(format!(
                "evaluation points {a} and {b} coincide"
            )));
        }
        Ok(Self { points })
    }

    pub fn from_real(points: &[f64]) -> Result<Self> {
        Self::new(points.iter().map(|&x| Scalar::from(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.points
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.points[i]
    }

    /// Points belonging to the given servers, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<EvalPoints> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.points.len()) {
            return Err(Error::InvalidParameter(format!("server {bad} has no point")));
        }
        EvalPoints::new(indices.iter().map(|&i| self.points[i]).collect())
    }

    /// Multiply every point by `exp(i * angle)`.
    pub fn rotated(&self, angle: f64) -> EvalPoints {
        let r = Scalar::from_polar(1.0, angle);
        EvalPoints {
            points: self.points.iter().map(|&z| z * r).collect(),
        }
    }
}

/// `gamma_j = exp(2 pi i j / n)` for `j = 1..=n`.
pub fn roots_of_unity(n: usize) -> Result<EvalPoints> {
    if n == 0 {
        return Err(Error::InvalidParameter("roots_of_unity needs n >= 1".into()));
    }
    let points = (1..=n)
        .map(|j| {
            // Snap the exactly-representable cases (+-1, +-i) so that small
            // examples come out exact.
            let num = 4 * j;
            if num % n == 0 {
                match (num / n) % 4 {
                    0 => Scalar::new(1.0, 0.0),
                    1 => Scalar::new(0.0, 1.0),
                    2 => Scalar::new(-1.0, 0.0),
                    _ => Scalar::new(0.0, -1.0),
                }
            } else {
                Scalar::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)
            }
        })
        .collect();
    EvalPoints::new(points)
}

/// `n x k` matrix with entry `(i, j) = gamma_i^j` (zero-based `j`).
pub fn vandermonde(points: &[Scalar], k: usize) -> Matrix {
    Matrix::from_fn(points.len(), k, |i, j| points[i].powi(j as i32))
}

/// Vandermonde-like matrix with arbitrary column exponents.
pub fn vandermonde_with_exponents(points: &[Scalar], exponents: &[usize]) -> Matrix {
    Matrix::from_fn(points.len(), exponents.len(), |i, j| points[i].powi(exponents[j] as i32))
}

/// Row vector `a` with `a^T V = e_1^T`, `V` the square Vandermonde on
/// `points`; i.e. the first row of `V^{-1}`.
pub fn decoding_row(points: &[Scalar]) -> Result<Vec<Scalar>> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("decoding_row needs at least one point".into()));
    }
    if let Some((a, b)) = first_duplicate(points) {
        return Err(Error::SingularSystem(format!("points {a} and {b} coincide")));
    }
    let k = points.len();
    let vt = vandermonde(points, k).transpose();
    let mut e1 = vec![Scalar::new(0.0, 0.0); k];
    e1[0] = Scalar::new(1.0, 0.0);
    Ok(Lu::factor(&vt)?.solve_vec(&e1))
}

/// Evaluate the matrix polynomial `sum_j coeffs[j] x^j` at `x`.
pub fn evaluate_matrix_poly(coeffs: &[Matrix], x: Scalar) -> Matrix {
    let (rows, cols) = coeffs.first().map_or((0, 0), Matrix::shape);
    let mut acc = Matrix::zeros(rows, cols);
    // Horner.
    for c in coeffs.iter().rev() {
        acc = acc.scale_complex(x);
        acc.axpy(Scalar::new(1.0, 0.0), c);
    }
    acc
}

/// Solve `sum_e coeff_e * gamma_i^e = values_i` for matrix coefficients,
/// one unknown per exponent. Square systems only.
pub fn interpolate_exponents(
    points: &[Scalar],
    exponents: &[usize],
    values: &[Matrix],
) -> Result<Vec<Matrix>> {
    if points.len() != values.len() || points.len() != exponents.len() {
        return Err(Error::InvalidInput(format!(
            "{} points, {} exponents, {} values",
            points.len(),
            exponents.len(),
            values.len()
        )));
    }
    let Some(first) = values.first() else {
        return Err(Error::InvalidInput("no samples to interpolate".into()));
    };
    let (rows, cols) = first.shape();
    if values.iter().any(|v| v.shape() != (rows, cols)) {
        return Err(Error::InvalidInput("sample matrices differ in shape".into()));
    }
    if let Some((a, b)) = first_duplicate(points) {
        return Err(Error::SingularSystem(format!("points {a} and {b} coincide")));
    }
    let m = points.len();
    let lu = Lu::factor(&vandermonde_with_exponents(points, exponents))?;

    // Each matrix entry is an independent scalar interpolation problem;
    // stack them as the columns of one right-hand side.
    let rhs = Matrix::from_fn(m, rows * cols, |i, e| values[i].as_slice()[e]);
    let sol = lu.solve(&rhs);
    let field_real = values.iter().all(|v| v.field() == crate::linalg::Field::Real)
        && points.iter().all(|p| p.im == 0.0);
    Ok((0..m)
        .map(|c| {
            let out = Matrix::from_fn(rows, cols, |i, j| sol.get(c, i * cols + j));
            if field_real {
                out.real_if_close(f64::INFINITY)
            } else {
                out
            }
        })
        .collect())
}

/// Coefficients `c_0..c_{m-1}` of the unique degree `<= m-1` matrix
/// polynomial through `(points[i], values[i])`.
pub fn lagrange_interpolate(points: &[Scalar], values: &[Matrix]) -> Result<Vec<Matrix>> {
    let exponents: Vec<usize> = (0..points.len()).collect();
    interpolate_exponents(points, &exponents, values)
}
