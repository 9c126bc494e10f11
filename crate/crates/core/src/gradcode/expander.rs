use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::gradcode::scheme::{DecoderKind, ExpanderSpectrum, GCScheme};
use crate::linalg::{sym_eigenvalues, Matrix};
use crate::rng::substream;

fn validate_graph(adj: &Matrix, degree: usize) -> Result<()> {
    let n = adj.rows();
    if !adj.is_square() || n == 0 {
        return Err(Error::InvalidGraph("adjacency must be square and nonempty".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let v = adj.get(i, j);
            if v.im != 0.0 || (v.re != 0.0 && v.re != 1.0) {
                return Err(Error::InvalidGraph(format!("entry ({i}, {j}) is not 0/1")));
            }
            if v != adj.get(j, i) {
                return Err(Error::InvalidGraph(format!("entry ({i}, {j}) breaks symmetry")));
            }
        }
        if adj.re(i, i) != 0.0 {
            return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
        }
        let d = (0..n).filter(|&j| adj.re(i, j) == 1.0).count();
        if d != degree {
            return Err(Error::InvalidGraph(format!("vertex {i} has degree {d}, expected {degree}")));
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if adj.re(u, v) == 1.0 && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    if seen.iter().any(|&x| !x) {
        return Err(Error::InvalidGraph("graph is disconnected".into()));
    }
    Ok(())
}

/// Adjacency spectrum summary of a connected `degree`-regular graph.
pub fn expander_spectrum(adj: &Matrix, degree: usize) -> Result<ExpanderSpectrum> {
    validate_graph(adj, degree)?;
    let eig = sym_eigenvalues(adj)?;
    let lambda = eig[1..].iter().map(|e| e.abs()).fold(0.0, f64::max);
    Ok(ExpanderSpectrum { degree, lambda })
}

/// Approximate gradient code on a regular expander: `G = adjacency / degree`,
/// decoded by `n / |I|` on the responders.
pub fn expander_scheme(adj: &Matrix, degree: usize, s: usize) -> Result<GCScheme> {
    let spectrum = expander_spectrum(adj, degree)?;
    if s >= adj.rows() {
        return Err(Error::InvalidParameter(format!("s = {s} must be below n = {}", adj.rows())));
    }
    let g = adj.scale(1.0 / degree as f64);
    let mut scheme = GCScheme::from_parts("expander", s, g, DecoderKind::Expander);
    scheme.spectrum = Some(spectrum);
    Ok(scheme)
}

fn from_edges(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for &(u, v) in edges {
        m.set(u, v, 1.0.into());
        m.set(v, u, 1.0.into());
    }
    m
}

pub fn petersen_graph() -> Matrix {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    from_edges(10, &edges)
}

pub fn complete_graph(n: usize) -> Matrix {
    Matrix::from_fn_real(n, n, |i, j| if i == j { 0.0 } else { 1.0 })
}

/// Uniform random simple connected `degree`-regular graph by the pairing
/// model with rejection.
pub fn random_regular_graph(n: usize, degree: usize, seed: u64) -> Result<Matrix> {
    if degree >= n || !(n * degree).is_multiple_of(2) || degree == 0 {
        return Err(Error::InvalidParameter(format!(
            "no simple connected {degree}-regular graph on {n} vertices"
        )));
    }
    let mut rng = substream(seed, "regular-graph", 0);
    for _ in 0..10_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
        stubs.shuffle(&mut rng);
        let edges: Vec<(usize, usize)> = stubs.chunks(2).map(|p| (p[0], p[1])).collect();
        let mut adj = Matrix::zeros(n, n);
        let mut simple = true;
        for &(u, v) in &edges {
            if u == v || adj.re(u, v) != 0.0 {
                simple = false;
                break;
            }
            adj.set(u, v, 1.0.into());
            adj.set(v, u, 1.0.into());
        }
        if simple && validate_graph(&adj, degree).is_ok() {
            return Ok(adj);
        }
    }
    Err(Error::InfeasibleParameters("pairing model kept failing".into()))
}
