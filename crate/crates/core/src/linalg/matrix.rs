use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Scalar = Complex64;

/// Field the entries of a [`Matrix`] live in.
///
/// Arithmetic is always carried out over the complex numbers; the tag records
/// whether a value is known to be real so that real results can be handed
/// back to callers without imaginary noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    fn join(self, other: Field) -> Field {
        if self == Field::Real && other == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

/// Dense row-major matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    field: Field,
    data: Vec<Scalar>,
}

impl Matrix {
    /// Build from row-major complex entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        let field = if data.iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        Ok(Self {
            rows,
            cols,
            field,
            data,
        })
    }

    /// Build from row-major real entries.
    pub fn from_real(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let mut m = Self::new(rows, cols, data.into_iter().map(Scalar::from).collect())?;
        m.field = Field::Real;
        Ok(m)
    }

    /// Build from nested rows; panics on ragged or non-finite input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_real(rows.len(), cols, rows.concat()).expect("finite entries")
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced a non-finite entry")
    }

    pub fn from_fn_real(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::from_fn(rows, cols, |i, j| Scalar::from(f(i, j)));
        m.field = Field::Real;
        m
    }

    /// Real matrix with i.i.d. standard normal entries drawn from `rng`.
    pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn_real(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            field: Field::Real,
            data: vec![Scalar::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn_real(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// `n x 1` column from real values.
    pub fn column(values: &[f64]) -> Self {
        Self::from_real(values.len(), 1, values.to_vec()).expect("finite entries")
    }

    /// `1 x n` row from real values.
    pub fn row_vector(values: &[f64]) -> Self {
        Self::from_real(1, values.len(), values.to_vec()).expect("finite entries")
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn_real(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.data[i * self.cols + j]
    }

    /// Real part of entry `(i, j)`.
    pub fn re(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).re
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: Scalar) {
        debug_assert!(value.re.is_finite() && value.im.is_finite());
        if value.im != 0.0 {
            self.field = Field::Complex;
        }
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Real parts in row-major order.
    pub fn to_real_vec(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Drop imaginary parts when they are below `tol` relative to the
    /// Frobenius norm; otherwise the matrix is returned unchanged.
    pub fn real_if_close(mut self, tol: f64) -> Self {
        if self.field == Field::Real {
            return self;
        }
        let scale = self.frobenius_norm().max(1.0);
        if self.max_imag() <= tol * scale {
            for z in &mut self.data {
                z.im = 0.0;
            }
            self.field = Field::Real;
        }
        self
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i));
        out.field = self.field;
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj());
        out.field = self.field;
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= factor;
        }
        out
    }

    pub fn scale_complex(&self, factor: Scalar) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= factor;
        }
        if factor.im != 0.0 {
            out.field = Field::Complex;
        }
        out
    }

    pub fn try_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![Scalar::new(0.0, 0.0); self.rows * other.cols];
        for i in 0..self.rows {
            let out_row = &mut data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == Scalar::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: other.cols,
            field: self.field.join(other.field),
            data,
        })
    }

    fn zip_with(&self, other: &Matrix, op: impl Fn(Scalar, Scalar) -> Scalar) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::InvalidInput(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            field: self.field.join(other.field),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect(),
        })
    }

    pub fn try_add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self += factor * other`, shapes must agree.
    pub fn axpy(&mut self, factor: Scalar, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
        if factor.im != 0.0 || other.field == Field::Complex {
            self.field = Field::Complex;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `||self - target||_F / ||target||_F`, or the absolute error when the
    /// target is zero.
    pub fn relative_error(&self, target: &Matrix) -> f64 {
        let diff = self.try_sub(target).expect("relative_error shape mismatch");
        let denom = target.frobenius_norm();
        if denom == 0.0 {
            diff.frobenius_norm()
        } else {
            diff.frobenius_norm() / denom
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut out = Matrix::from_fn(rows.len(), self.cols, |i, j| self.get(rows[i], j));
        out.field = self.field;
        out
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]));
        out.field = self.field;
        out
    }

    /// Contiguous sub-block starting at `(row, col)`.
    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Matrix {
        assert!(row + rows <= self.rows && col + cols <= self.cols, "block out of range");
        let mut out = Matrix::from_fn(rows, cols, |i, j| self.get(row + i, col + j));
        out.field = self.field;
        out
    }

    pub fn hstack(blocks: &[Matrix]) -> Result<Matrix> {
        let rows = blocks.first().map_or(0, Matrix::rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::InvalidInput("hstack row counts differ".into()));
        }
        let cols = blocks.iter().map(Matrix::cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Ok(Matrix {
            rows,
            cols,
            field: blocks.iter().fold(Field::Real, |f, b| f.join(b.field)),
            data,
        })
    }

    pub fn vstack(blocks: &[Matrix]) -> Result<Matrix> {
        let cols = blocks.first().map_or(0, Matrix::cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::InvalidInput("vstack column counts differ".into()));
        }
        let rows = blocks.iter().map(Matrix::rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(Matrix {
            rows,
            cols,
            field: blocks.iter().fold(Field::Real, |f, b| f.join(b.field)),
            data,
        })
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Scalar> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Scalar>, field: Field) -> Matrix {
        let mut out = Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
        if field == Field::Real {
            for z in &mut out.data {
                z.im = 0.0;
            }
            out.field = Field::Real;
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Scalar;

    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl Mul<&Matrix> for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.try_matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add<&Matrix> for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub<&Matrix> for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} ({:?})", self.rows, self.cols, self.field)?;
        for i in 0..self.rows {
            let cells: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| match self.field {
                    Field::Real => format!("{:.6}", z.re),
                    Field::Complex => format!("{:.4}{:+.4}i", z.re, z.im),
                })
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        assert!(Matrix::from_real(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_real(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(Matrix::from_real(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn product_and_adjoint() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let c = &a * &b;
        assert_eq!(c.to_real_vec(), vec![2.0, 1.0, 4.0, 3.0]);
        assert_eq!(c.field(), Field::Real);

        let z = Matrix::new(1, 2, vec![Scalar::new(1.0, 2.0), Scalar::new(0.0, -1.0)]).unwrap();
        let zh = z.adjoint();
        assert_eq!(zh.get(0, 0), Scalar::new(1.0, -2.0));
        assert_eq!(zh.get(1, 0), Scalar::new(0.0, 1.0));
        assert_eq!((&z * &zh).get(0, 0), Scalar::new(6.0, 0.0));
        assert!(z.try_matmul(&z).is_err());
    }

    #[test]
    fn real_if_close_drops_noise_only() {
        let noisy = Matrix::new(1, 2, vec![Scalar::new(1.0, 1e-14), Scalar::new(2.0, 0.0)]).unwrap();
        assert_eq!(noisy.field(), Field::Complex);
        let cleaned = noisy.real_if_close(1e-10);
        assert_eq!(cleaned.field(), Field::Real);
        assert_eq!(cleaned.max_imag(), 0.0);

        let genuine = Matrix::new(1, 1, vec![Scalar::new(1.0, 0.5)]).unwrap();
        assert_eq!(genuine.real_if_close(1e-10).field(), Field::Complex);
    }

    #[test]
    fn stacking_round_trips() {
        let m = Matrix::from_fn_real(3, 4, |i, j| (i * 4 + j) as f64);
        let left = m.block(0, 0, 3, 1);
        let right = m.block(0, 1, 3, 3);
        assert_eq!(Matrix::hstack(&[left, right]).unwrap(), m);
        let top = m.select_rows(&[0]);
        let bottom = m.select_rows(&[1, 2]);
        assert_eq!(Matrix::vstack(&[top, bottom]).unwrap(), m);
    }
}
