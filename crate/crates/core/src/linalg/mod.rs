//! Dense linear algebra over real and complex scalars.

mod lu;
mod matrix;
mod partition;
mod poly;
mod spectral;

pub use lu::Lu;
pub use matrix::{Field, Matrix, Scalar};
pub use partition::{join_grid, split_cols, split_rows, BlockPartition, PartitionScheme};
pub use poly::{
    decoding_row, evaluate_matrix_poly, interpolate_exponents, lagrange_interpolate,
    roots_of_unity, vandermonde, vandermonde_with_exponents, EvalPoints,
};
pub use spectral::{
    full_column_basis, orthonormal_basis, orthonormality_defect, pseudoinverse, rank,
    singular_values, spectral_norm, sym_eigenvalues,
};

/// Default tolerance for exact-recovery checks, relative to the target's
/// Frobenius norm.
pub const EXACT_TOL: f64 = 1e-8;
