use crate::codedmm::scheme::{CMMScheme, CmmDecoder, Exactness, ServerTask};
use crate::error::{Error, Result};
use crate::linalg::{
    evaluate_matrix_poly, split_cols, split_rows, BlockPartition, EvalPoints, Field, Matrix,
    PartitionScheme,
};

pub(crate) fn check_inner(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(Error::InvalidInput(format!(
            "inner dimensions differ: {} vs {}",
            a.cols(),
            b.rows()
        )));
    }
    Ok(())
}

pub(crate) fn real_pair(a: &Matrix, b: &Matrix) -> bool {
    a.field() == Field::Real && b.field() == Field::Real
}

/// Tasks `(p_A(gamma_i), p_B(gamma_i))` for two coefficient lists.
pub(crate) fn evaluate_tasks(points: &EvalPoints, left: &[Matrix], right: &[Matrix]) -> Vec<ServerTask> {
    points
        .as_slice()
        .iter()
        .map(|&x| ServerTask {
            left: evaluate_matrix_poly(left, x),
            right: evaluate_matrix_poly(right, x),
        })
        .collect()
}

/// Encoding `sum_j L_j x^{j-1}`, `sum_j R_j x^{m-j}` of `m` block pairs, so
/// that `sum_j L_j R_j` is the coefficient of `x^{m-1}`.
pub(crate) fn matdot_like(
    name: &str,
    left_blocks: Vec<Matrix>,
    mut right_blocks: Vec<Matrix>,
    points: &EvalPoints,
    factor: f64,
    exactness: Exactness,
    a: &Matrix,
    b: &Matrix,
) -> Result<CMMScheme> {
    let m = left_blocks.len();
    let threshold = 2 * m - 1;
    if points.len() < threshold {
        return Err(Error::InfeasibleParameters(format!(
            "{} servers cannot reach recovery threshold {threshold}",
            points.len()
        )));
    }
    right_blocks.reverse();
    Ok(CMMScheme {
        name: name.to_string(),
        threshold,
        tasks: evaluate_tasks(points, &left_blocks, &right_blocks),
        points: Some(points.clone()),
        exactness,
        decoder: CmmDecoder::Coefficient { index: m - 1, factor },
        real_inputs: real_pair(a, b),
        product: a * b,
        sample: None,
    })
}

/// MatDot code: `A` split into `k` column blocks and `B` into `k` row blocks;
/// any `2k - 1` of the servers recover `A B`.
pub fn matdot(a: &Matrix, b: &Matrix, k: usize, points: &EvalPoints) -> Result<CMMScheme> {
    check_inner(a, b)?;
    let (left, right) = BlockPartition::new(k, PartitionScheme::ColsARowsB)?.split_pair(a, b)?;
    matdot_like("matdot", left, right, points, 1.0, Exactness::Exact, a, b)
}

/// Polynomial code: `A` split into `k` row blocks and `B` into `k` column
/// blocks, block `(j, l)` of `A B` carried by the monomial
/// `x^{j a_exp + l b_exp}`; any `k^2` servers recover `A B`.
pub fn polynomial_code(
    a: &Matrix,
    b: &Matrix,
    k: usize,
    a_exp: usize,
    b_exp: usize,
    points: &EvalPoints,
) -> Result<CMMScheme> {
    check_inner(a, b)?;
    let threshold = k * k;
    let grid: Vec<Vec<usize>> = (0..k)
        .map(|j| (0..k).map(|l| j * a_exp + l * b_exp).collect())
        .collect();
    let mut exponents: Vec<usize> = grid.iter().flatten().copied().collect();
    exponents.sort_unstable();
    if exponents.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidExponents(format!(
            "exponents ({a_exp}, {b_exp}) give colliding monomials for k = {k}"
        )));
    }
    if points.len() < threshold {
        return Err(Error::InfeasibleParameters(format!(
            "{} servers cannot reach recovery threshold {threshold}",
            points.len()
        )));
    }
    let a_blocks = split_rows(a, k)?;
    let b_blocks = split_cols(b, k)?;
    let spread = |blocks: &[Matrix], step: usize| -> Vec<Matrix> {
        let (r, c) = blocks[0].shape();
        let mut coeffs = vec![Matrix::zeros(r, c); (k - 1) * step + 1];
        for (j, blk) in blocks.iter().enumerate() {
            coeffs[j * step] = blk.clone();
        }
        coeffs
    };
    let tasks = evaluate_tasks(points, &spread(&a_blocks, a_exp), &spread(&b_blocks, b_exp));
    Ok(CMMScheme {
        name: "polynomial".into(),
        threshold,
        tasks,
        points: Some(points.clone()),
        exactness: Exactness::Exact,
        decoder: CmmDecoder::Grid { exponents, grid },
        real_inputs: real_pair(a, b),
        product: a * b,
        sample: None,
    })
}

/// The two-block entangled code: server `i` multiplies `A_0 + x A_1` by
/// `x B^0 + B^1`; `A B` is the linear coefficient and any 3 servers suffice.
pub fn entangled_example(a: &Matrix, b: &Matrix, points: &EvalPoints) -> Result<CMMScheme> {
    check_inner(a, b)?;
    let a_blocks = split_cols(a, 2)?;
    let b_blocks = split_rows(b, 2)?;
    let mut scheme = matdot_like(
        "entangled",
        a_blocks,
        b_blocks,
        points,
        1.0,
        Exactness::Exact,
        a,
        b,
    )?;
    scheme.threshold = 3;
    Ok(scheme)
}
