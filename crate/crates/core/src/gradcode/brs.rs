use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcode::scheme::{BrsParts, DecoderKind, GCScheme};
use crate::linalg::{roots_of_unity, vandermonde, EvalPoints, Matrix, Scalar};

/// Sparsest balanced 0/1 support pattern for an `n x k` encoding matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskMatrix {
    mask: Matrix,
    row_weight: usize,
    column_weight: usize,
}

impl MaskMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.mask
    }

    pub fn row_weight(&self) -> usize {
        self.row_weight
    }

    pub fn column_weight(&self) -> usize {
        self.column_weight
    }

    pub fn is_set(&self, i: usize, j: usize) -> bool {
        self.mask.re(i, j) != 0.0
    }

    /// Rows where column `j` is zero.
    pub fn zero_rows(&self, j: usize) -> Vec<usize> {
        (0..self.mask.rows()).filter(|&i| !self.is_set(i, j)).collect()
    }
}

/// Cyclic mask: column `j` is supported on the `col_weight` consecutive rows
/// starting at `j * col_weight`, wrapping modulo `n`.
pub fn balanced_mask(n: usize, k: usize, col_weight: usize) -> Result<MaskMatrix> {
    if n == 0 || k == 0 || col_weight == 0 || col_weight > n {
        return Err(Error::InvalidParameter(format!(
            "mask needs n, k >= 1 and 1 <= d <= n, got n = {n}, k = {k}, d = {col_weight}"
        )));
    }
    if !(k * col_weight).is_multiple_of(n) {
        return Err(Error::InvalidParameter(format!(
            "k * d = {} must be divisible by n = {n}",
            k * col_weight
        )));
    }
    let mut mask = Matrix::zeros(n, k);
    for j in 0..k {
        for t in 0..col_weight {
            mask.set((j * col_weight + t) % n, j, Scalar::new(1.0, 0.0));
        }
    }
    Ok(MaskMatrix {
        mask,
        row_weight: k * col_weight / n,
        column_weight: col_weight,
    })
}

fn poly_mul_linear(coeffs: &mut Vec<Scalar>, root: Scalar) {
    // (c_0 + c_1 x + ...) * (x - root)
    coeffs.push(Scalar::new(0.0, 0.0));
    for t in (0..coeffs.len()).rev() {
        let lower = if t > 0 { coeffs[t - 1] } else { Scalar::new(0.0, 0.0) };
        coeffs[t] = lower - root * coeffs[t];
    }
}

/// Magnitude below which a constant term counts as vanishing.
const CONSTANT_TERM_TOL: f64 = 1e-12;

/// Balanced Reed-Solomon gradient code on the given evaluation points.
pub fn brs_scheme(n: usize, k: usize, s: usize, points: &EvalPoints) -> Result<GCScheme> {
    if points.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} evaluation points for {n} servers",
            points.len()
        )));
    }
    if s >= n {
        return Err(Error::InvalidParameter(format!("s = {s} must be below n = {n}")));
    }
    if k == 0 || s > k - 1 {
        return Err(Error::DegreeOverflow {
            stragglers: s,
            max_degree: k.saturating_sub(1),
        });
    }
    let mask = balanced_mask(n, k, n - s)?;
    let mut coefficients = Matrix::zeros(k, k);
    for j in 0..k {
        let mut poly = vec![Scalar::new(1.0, 0.0)];
        for i in mask.zero_rows(j) {
            poly_mul_linear(&mut poly, points.get(i));
        }
        let constant = poly[0];
        if constant.norm() <= CONSTANT_TERM_TOL {
            return Err(Error::EvaluationPoint { column: j });
        }
        for (t, c) in poly.into_iter().enumerate() {
            coefficients.set(t, j, c / constant);
        }
    }
    let h = vandermonde(points.as_slice(), k);
    let mut g = &h * &coefficients;
    let scale = g.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..k {
            if !mask.is_set(i, j) {
                debug_assert!(g.get(i, j).norm() <= 1e-8 * scale);
                g.set(i, j, Scalar::new(0.0, 0.0));
            }
        }
    }
    let g = g.real_if_close(0.0);
    let mut scheme = GCScheme::from_parts("brs", s, g, DecoderKind::ExactBrs);
    scheme.brs = Some(BrsParts {
        points: points.clone(),
        coefficients,
        vandermonde: h,
        mask: mask.mask,
    });
    Ok(scheme)
}

/// BRS code on the `n`-th roots of unity, rotating the family if a
/// polynomial's constant term vanishes.
pub fn brs_default(n: usize, k: usize, s: usize) -> Result<GCScheme> {
    let base = roots_of_unity(n)?;
    let mut last = None;
    for attempt in 0..8 {
        let points = base.rotated(PI * attempt as f64 / (8 * n) as f64);
        match brs_scheme(n, k, s, &points) {
            Err(e @ Error::EvaluationPoint { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}
