use itertools::Itertools;

use crate::error::{Error, Result};
use crate::gradcode::scheme::{DecoderKind, GCScheme};
use crate::linalg::Matrix;

/// Parameters of a validated balanced incomplete block design.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DesignParameters {
    pub points: usize,
    pub blocks: usize,
    pub block_size: usize,
    /// Blocks through each point.
    pub replication: usize,
    /// Blocks through each pair of points.
    pub lambda: usize,
}

/// Check that a `points x blocks` 0/1 incidence matrix is a BIBD with the
/// given pair multiplicity.
pub fn validate_design(incidence: &Matrix, lambda: usize) -> Result<DesignParameters> {
    let (v, b) = incidence.shape();
    if v < 2 || b == 0 {
        return Err(Error::InvalidDesign("design needs at least two points and one block".into()));
    }
    if incidence.as_slice().iter().any(|z| z.im != 0.0 || (z.re != 0.0 && z.re != 1.0)) {
        return Err(Error::InvalidDesign("incidence entries must be 0/1".into()));
    }
    let member = |i: usize, j: usize| incidence.re(i, j) == 1.0;
    let replication = (0..b).filter(|&j| member(0, j)).count();
    if let Some(i) = (0..v).find(|&i| (0..b).filter(|&j| member(i, j)).count() != replication) {
        return Err(Error::InvalidDesign(format!("point {i} has a different replication number")));
    }
    let block_size = (0..v).filter(|&i| member(i, 0)).count();
    if let Some(j) = (0..b).find(|&j| (0..v).filter(|&i| member(i, j)).count() != block_size) {
        return Err(Error::InvalidDesign(format!("block {j} has a different size")));
    }
    for (p, q) in (0..v).tuple_combinations() {
        let together = (0..b).filter(|&j| member(p, j) && member(q, j)).count();
        if together != lambda {
            return Err(Error::InvalidDesign(format!(
                "points {p} and {q} share {together} blocks, expected {lambda}"
            )));
        }
    }
    Ok(DesignParameters {
        points: v,
        blocks: b,
        block_size,
        replication,
        lambda,
    })
}

/// Least-squares optimal common coefficient when `responders` points answer:
/// `r / (r + lambda (responders - 1))` with `r` the replication number.
pub fn bibd_rho(params: &DesignParameters, responders: usize) -> f64 {
    let r = params.replication as f64;
    r / (r + params.lambda as f64 * (responders as f64 - 1.0))
}

/// Gradient code whose encoding matrix is a BIBD incidence matrix, decoded by
/// the closed-form constant coefficient for `n - s` responders.
pub fn bibd_scheme(incidence: &Matrix, lambda: usize, s: usize) -> Result<GCScheme> {
    let params = validate_design(incidence, lambda)?;
    if s >= params.points {
        return Err(Error::InvalidParameter(format!(
            "s = {s} must be below n = {}",
            params.points
        )));
    }
    let rho = bibd_rho(&params, params.points - s);
    Ok(GCScheme::from_parts(
        "bibd",
        s,
        incidence.clone(),
        DecoderKind::OneStep { rho },
    ))
}

/// The 2-(7, 3, 1) design.
pub fn fano_plane() -> Matrix {
    let lines = [[0, 1, 2], [0, 3, 4], [0, 5, 6], [1, 3, 5], [1, 4, 6], [2, 3, 6], [2, 4, 5]];
    Matrix::from_fn_real(7, 7, |i, j| if lines[j].contains(&i) { 1.0 } else { 0.0 })
}

/// All 2-subsets of `v` points as blocks: a 2-(v, 2, 1) design.
pub fn complete_design(v: usize) -> Matrix {
    let pairs: Vec<(usize, usize)> = (0..v).tuple_combinations().collect();
    Matrix::from_fn_real(v, pairs.len(), |i, j| if pairs[j].0 == i || pairs[j].1 == i { 1.0 } else { 0.0 })
}
