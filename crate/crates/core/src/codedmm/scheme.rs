use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    interpolate_exponents, join_grid, lagrange_interpolate, EvalPoints,
    Matrix, Scalar,
};

/// Imaginary parts below this are dropped from decoded products of real
/// inputs.
pub const REAL_OUTPUT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exactness {
    Exact,
    UnbiasedApproximate,
    SketchApproximate,
}

/// Encoded operand pair for one server; the server computes `left * right`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerTask {
    pub left: Matrix,
    pub right: Matrix,
}

impl ServerTask {
    pub fn compute(&self) -> Matrix {
        &self.left * &self.right
    }

    /// Multiply-add count of the task's product.
    pub fn flops(&self) -> f64 {
        (self.left.rows() * self.left.cols() * self.right.cols()) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerOutput {
    pub server_id: usize,
    pub w: Matrix,
    pub point: Option<Scalar>,
}

/// Blocks drawn by a sampling scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledBlocks {
    pub indices: Vec<usize>,
    /// Multiplicity of each index; all ones for i.i.d. and set-wise draws.
    pub weights: Vec<usize>,
    /// Importance factor applied to block product `indices[j]`.
    pub factors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) enum CmmDecoder {
    /// Interpolate `x^0 .. x^{f-1}` and return `factor` times coefficient
    /// `index`.
    Coefficient { index: usize, factor: f64 },
    /// Interpolate the listed exponents; `grid[j][l]` names the exponent
    /// whose coefficient is block `(j, l)` of the product.
    Grid { exponents: Vec<usize>, grid: Vec<Vec<usize>> },
    /// Server `i` contributes term `tasks[i].2` to output block
    /// `(tasks[i].0, tasks[i].1)`; each block sums `needed` terms.
    BlockSum {
        blocks: (usize, usize),
        needed: usize,
        tasks: Vec<(usize, usize, usize)>,
    },
}

/// A coded matrix multiplication: encoded tasks for `n` servers and a
/// decoder that rebuilds (an estimate of) `A B` from enough responses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMMScheme {
    pub(crate) name: String,
    pub(crate) threshold: usize,
    pub(crate) tasks: Vec<ServerTask>,
    pub(crate) points: Option<EvalPoints>,
    pub(crate) exactness: Exactness,
    pub(crate) decoder: CmmDecoder,
    pub(crate) real_inputs: bool,
    pub(crate) product: Matrix,
    pub(crate) sample: Option<SampledBlocks>,
}

/// Two distinct matrix polynomials agreeing with every given response,
/// whose decoded products differ.
#[derive(Clone, Debug)]
pub struct Ambiguity {
    pub first: Vec<Matrix>,
    pub second: Vec<Matrix>,
    /// Coefficient the decoder would read.
    pub index: usize,
}

impl CMMScheme {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn servers(&self) -> usize {
        self.tasks.len()
    }

    /// Recovery threshold `f`: the fewest responses that can decode.
    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn tasks(&self) -> &[ServerTask] {
        &self.tasks
    }

    pub fn points(&self) -> Option<&EvalPoints> {
        self.points.as_ref()
    }

    /// The exact product `A B`, for error reporting.
    pub fn product(&self) -> &Matrix {
        &self.product
    }

    pub fn sampled_blocks(&self) -> Option<&SampledBlocks> {
        self.sample.as_ref()
    }

    pub fn compute(&self, server: usize) -> ServerOutput {
        ServerOutput {
            server_id: server,
            w: self.tasks[server].compute(),
            point: self.points.as_ref().map(|p| p.get(server)),
        }
    }

    pub fn compute_all(&self) -> Vec<ServerOutput> {
        (0..self.servers()).map(|i| self.compute(i)).collect()
    }

    /// Whether the given responding servers suffice to decode.
    pub fn can_decode(&self, servers: &[usize]) -> bool {
        let mut ids: Vec<usize> = servers.iter().copied().filter(|&i| i < self.servers()).collect();
        ids.sort_unstable();
        ids.dedup();
        match &self.decoder {
            CmmDecoder::BlockSum { blocks, needed, tasks } => {
                let mut counts = vec![0usize; blocks.0 * blocks.1];
                for &i in &ids {
                    let (u, v, _) = tasks[i];
                    counts[u * blocks.1 + v] += 1;
                }
                counts.iter().all(|&c| c >= *needed)
            }
            _ => ids.len() >= self.threshold,
        }
    }

    fn distinct_responses<'a>(&self, responses: &'a [ServerOutput]) -> Result<BTreeMap<usize, &'a ServerOutput>> {
        let mut by_id = BTreeMap::new();
        for r in responses {
            if r.server_id >= self.servers() {
                return Err(Error::InvalidInput(format!("unknown server {}", r.server_id)));
            }
            by_id.entry(r.server_id).or_insert(r);
        }
        Ok(by_id)
    }

    fn finish(&self, m: Matrix) -> Matrix {
        if self.real_inputs {
            m.real_if_close(REAL_OUTPUT_TOL)
        } else {
            m
        }
    }

    /// Decode from any sufficient set of responses. Duplicates are ignored
    /// by server id; beyond the threshold the lowest ids are used, so the
    /// result does not depend on response order.
    pub fn decode(&self, responses: &[ServerOutput]) -> Result<Matrix> {
        let by_id = self.distinct_responses(responses)?;
        match &self.decoder {
            CmmDecoder::BlockSum { blocks, needed, tasks } => {
                let mut sums: Vec<Option<(usize, Matrix)>> = vec![None; blocks.0 * blocks.1];
                for (&i, r) in &by_id {
                    let (u, v, _) = tasks[i];
                    let slot = &mut sums[u * blocks.1 + v];
                    match slot {
                        Some((count, acc)) if *count < *needed => {
                            *acc = &*acc + &r.w;
                            *count += 1;
                        }
                        Some(_) => {}
                        None => *slot = Some((1, r.w.clone())),
                    }
                }
                let mut grid = Vec::with_capacity(blocks.0);
                for u in 0..blocks.0 {
                    let mut row = Vec::with_capacity(blocks.1);
                    for v in 0..blocks.1 {
                        match &sums[u * blocks.1 + v] {
                            Some((count, acc)) if count >= needed => row.push(acc.clone()),
                            other => {
                                return Err(Error::InsufficientResponses {
                                    needed: *needed,
                                    got: other.as_ref().map_or(0, |(c, _)| *c),
                                })
                            }
                        }
                    }
                    grid.push(row);
                }
                Ok(self.finish(join_grid(&grid)?))
            }
            decoder => {
                if by_id.len() < self.threshold {
                    return Err(Error::InsufficientResponses {
                        needed: self.threshold,
                        got: by_id.len(),
                    });
                }
                let points = self.points.as_ref().expect("polynomial schemes carry points");
                let chosen: Vec<(&usize, &&ServerOutput)> = by_id.iter().take(self.threshold).collect();
                let pts: Vec<Scalar> = chosen.iter().map(|(&i, _)| points.get(i)).collect();
                let values: Vec<Matrix> = chosen.iter().map(|(_, r)| r.w.clone()).collect();
                match decoder {
                    CmmDecoder::Coefficient { index, factor } => {
                        let coeffs = lagrange_interpolate(&pts, &values)?;
                        Ok(self.finish(coeffs[*index].scale(*factor)))
                    }
                    CmmDecoder::Grid { exponents, grid } => {
                        let coeffs = interpolate_exponents(&pts, exponents, &values)?;
                        let slot = |e: usize| exponents.iter().position(|&x| x == e).expect("exponent listed");
                        let blocks: Vec<Vec<Matrix>> = grid
                            .iter()
                            .map(|row| row.iter().map(|&e| coeffs[slot(e)].clone()).collect())
                            .collect();
                        Ok(self.finish(join_grid(&blocks)?))
                    }
                    CmmDecoder::BlockSum { .. } => unreachable!(),
                }
            }
        }
    }

    /// For a polynomial-coefficient scheme given fewer than `f` responses,
    /// exhibit two interpolants that both fit every response yet decode to
    /// different products. `None` when the responses already pin down the
    /// decoded coefficient.
    pub fn ambiguity(&self, responses: &[ServerOutput]) -> Result<Option<Ambiguity>> {
        let CmmDecoder::Coefficient { index, .. } = self.decoder else {
            return Err(Error::InvalidInput("ambiguity is defined for coefficient decoders".into()));
        };
        let by_id = self.distinct_responses(responses)?;
        let m = by_id.len();
        if m == 0 || m >= self.threshold {
            return Ok(None);
        }
        let points = self.points.as_ref().expect("polynomial schemes carry points");
        let pts: Vec<Scalar> = by_id.keys().map(|&i| points.get(i)).collect();
        let values: Vec<Matrix> = by_id.values().map(|r| r.w.clone()).collect();
        let f = self.threshold;
        let mut first = lagrange_interpolate(&pts, &values)?;
        let (rows, cols) = values[0].shape();
        first.resize(f, Matrix::zeros(rows, cols));

        // q(x) = prod (x - gamma_i) vanishes on every responder; so does
        // x^t q(x) while the degree stays below f.
        let mut q = vec![Scalar::new(1.0, 0.0)];
        for &p in &pts {
            q.push(Scalar::new(0.0, 0.0));
            for t in (0..q.len()).rev() {
                let lower = if t > 0 { q[t - 1] } else { Scalar::new(0.0, 0.0) };
                q[t] = lower - p * q[t];
            }
        }
        let scale = q.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for shift in 0..f - m {
            let c = if index >= shift && index - shift < q.len() { q[index - shift] } else { Scalar::new(0.0, 0.0) };
            if c.norm() > 1e-9 * scale {
                let ones = Matrix::from_fn_real(rows, cols, |_, _| 1.0);
                let second = first
                    .iter()
                    .enumerate()
                    .map(|(t, coeff)| {
                        let qt = if t >= shift && t - shift < q.len() { q[t - shift] } else { Scalar::new(0.0, 0.0) };
                        let mut out = coeff.clone();
                        out.axpy(qt, &ones);
                        out
                    })
                    .collect();
                return Ok(Some(Ambiguity { first, second, index }));
            }
        }
        Ok(None)
    }
}
