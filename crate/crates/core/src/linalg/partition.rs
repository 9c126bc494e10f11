//! Block partitionings of a matrix pair `(A, B)` for distributed products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;

/// How a product `A B` is split into `k` block pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionScheme {
    /// `A = [A^1 .. A^k]` by columns, `B = [B_1; ..; B_k]` by rows, so that
    /// `A B = sum_i A^i B_i`.
    ColsARowsB,
    /// `A = [A_1; ..; A_k]` by rows, `B = [B^1 .. B^k]` by columns, so that
    /// block `(j, l)` of `A B` is `A_j B^l`.
    RowsAColsB,
}

/// Split a matrix into `k` equal blocks of consecutive rows.
pub fn split_rows(m: &Matrix, k: usize) -> Result<Vec<Matrix>> {
    check_divides(m.rows(), k, "row count")?;
    let h = m.rows() / k;
    Ok((0..k).map(|i| m.block(i * h, 0, h, m.cols())).collect())
}

/// Split a matrix into `k` equal blocks of consecutive columns.
pub fn split_cols(m: &Matrix, k: usize) -> Result<Vec<Matrix>> {
    check_divides(m.cols(), k, "column count")?;
    let w = m.cols() / k;
    Ok((0..k).map(|i| m.block(0, i * w, m.rows(), w)).collect())
}

fn check_divides(dim: usize, k: usize, what: &str) -> Result<()> {
    if k == 0 || !dim.is_multiple_of(k) {
        return Err(Error::InvalidParameter(format!("k = {k} does not divide {what} {dim}")));
    }
    Ok(())
}

/// A declarative split of `(A, B)` into `k` block pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub k: usize,
    pub scheme: PartitionScheme,
}

impl BlockPartition {
    pub fn new(k: usize, scheme: PartitionScheme) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("block count must be >= 1".into()));
        }
        Ok(Self { k, scheme })
    }

    pub fn split_a(&self, a: &Matrix) -> Result<Vec<Matrix>> {
        match self.scheme {
            PartitionScheme::ColsARowsB => split_cols(a, self.k),
            PartitionScheme::RowsAColsB => split_rows(a, self.k),
        }
    }

    pub fn split_b(&self, b: &Matrix) -> Result<Vec<Matrix>> {
        match self.scheme {
            PartitionScheme::ColsARowsB => split_rows(b, self.k),
            PartitionScheme::RowsAColsB => split_cols(b, self.k),
        }
    }

    pub fn join_a(&self, blocks: &[Matrix]) -> Result<Matrix> {
        match self.scheme {
            PartitionScheme::ColsARowsB => Matrix::hstack(blocks),
            PartitionScheme::RowsAColsB => Matrix::vstack(blocks),
        }
    }

    pub fn join_b(&self, blocks: &[Matrix]) -> Result<Matrix> {
        match self.scheme {
            PartitionScheme::ColsARowsB => Matrix::vstack(blocks),
            PartitionScheme::RowsAColsB => Matrix::hstack(blocks),
        }
    }

    /// Split both operands, checking that the inner dimensions agree.
    pub fn split_pair(&self, a: &Matrix, b: &Matrix) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
        if a.cols() != b.rows() {
            return Err(Error::InvalidInput(format!(
                "inner dimensions differ: {} vs {}",
                a.cols(),
                b.rows()
            )));
        }
        Ok((self.split_a(a)?, self.split_b(b)?))
    }
}

/// Reassemble a `k x k` grid of blocks (`grid[j][l]`) into one matrix.
pub fn join_grid(grid: &[Vec<Matrix>]) -> Result<Matrix> {
    let rows: Vec<Matrix> = grid
        .iter()
        .map(|r| Matrix::hstack(r))
        .collect::<Result<_>>()?;
    Matrix::vstack(&rows)
}
