use itertools::Itertools;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{decoding_row, pseudoinverse, EvalPoints, Matrix, Scalar};
use crate::rng::substream;

/// How a scheme turns a responder set into a decoding vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DecoderKind {
    /// Per partition, the lowest-index responding replica.
    ExactFrc,
    /// Vandermonde solve on the first `k` responders.
    ExactBrs,
    /// The same coefficient on every responder.
    OneStep { rho: f64 },
    /// Least-squares decoding vector through the pseudoinverse of `G_I`.
    OptimalLsq,
    /// `n / |I|` on every responder.
    Expander,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodingVector {
    /// Length-`n` coefficients, zero outside `responders`.
    pub a: Vec<Scalar>,
    pub responders: Vec<usize>,
    /// Set when `G_I` is identically zero and no decoding is possible.
    pub degenerate: bool,
}

/// Spectral data of an expander-based scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpanderSpectrum {
    pub degree: usize,
    /// Largest adjacency eigenvalue magnitude other than the degree.
    pub lambda: f64,
}

impl ExpanderSpectrum {
    /// Worst-case decoding error with `s` of `n` servers missing.
    pub fn error_bound(&self, n: usize, s: usize) -> f64 {
        let (n, s) = (n as f64, s as f64);
        self.lambda / self.degree as f64 * (n * s / (n - s)).sqrt()
    }
}

/// Polynomial structure of a Balanced Reed-Solomon code: `G = H P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrsParts {
    pub points: EvalPoints,
    /// `k x k` coefficients, column `j` holding `p_j` from the constant term up.
    pub coefficients: Matrix,
    /// `n x k` Vandermonde matrix of the evaluation points.
    pub vandermonde: Matrix,
    pub mask: Matrix,
}

/// A gradient code: `n` servers, `k` data partitions and an `n x k` encoding
/// matrix whose row `i` tells server `i` how to combine its partial gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GCScheme {
    pub(crate) name: String,
    pub(crate) n: usize,
    pub(crate) k: usize,
    pub(crate) s: usize,
    pub(crate) g: Matrix,
    pub(crate) assignments: Vec<Vec<usize>>,
    pub(crate) decoder: DecoderKind,
    pub(crate) target: Vec<f64>,
    pub(crate) brs: Option<BrsParts>,
    pub(crate) spectrum: Option<ExpanderSpectrum>,
}

fn supports(g: &Matrix) -> Vec<Vec<usize>> {
    (0..g.rows())
        .map(|i| (0..g.cols()).filter(|&j| g.get(i, j).norm() > 0.0).collect())
        .collect()
}

impl GCScheme {
    pub(crate) fn from_parts(name: &str, s: usize, g: Matrix, decoder: DecoderKind) -> Self {
        let (n, k) = g.shape();
        Self {
            name: name.to_string(),
            n,
            k,
            s,
            assignments: supports(&g),
            g,
            decoder,
            target: vec![1.0; k],
            brs: None,
            spectrum: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn servers(&self) -> usize {
        self.n
    }

    pub fn partitions(&self) -> usize {
        self.k
    }

    /// Number of stragglers the scheme was designed for.
    pub fn stragglers(&self) -> usize {
        self.s
    }

    /// Responses needed before decoding, `n - s`.
    pub fn threshold(&self) -> usize {
        self.n - self.s
    }

    pub fn encoding(&self) -> &Matrix {
        &self.g
    }

    /// Partitions held by each server.
    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn decoder(&self) -> &DecoderKind {
        &self.decoder
    }

    /// Row vector that `a_I^T G_I` should reproduce; all ones except for
    /// weighted codes.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn brs_parts(&self) -> Option<&BrsParts> {
        self.brs.as_ref()
    }

    pub fn spectrum(&self) -> Option<&ExpanderSpectrum> {
        self.spectrum.as_ref()
    }

    /// Largest row support, `w`.
    pub fn row_weight(&self) -> usize {
        self.assignments.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Largest column support, `d`.
    pub fn column_weight(&self) -> usize {
        (0..self.k)
            .map(|j| self.assignments.iter().filter(|a| a.contains(&j)).count())
            .max()
            .unwrap_or(0)
    }

    /// Same scheme with its decoder replaced.
    pub fn with_decoder(mut self, decoder: DecoderKind) -> Self {
        self.decoder = decoder;
        self
    }

    /// Relabel servers: old server `i` becomes server `perm[i]`.
    pub fn permute_servers(&self, perm: &[usize]) -> Result<GCScheme> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || perm.iter().any(|&p| p >= self.n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("not a permutation of the servers".into()));
        }
        let mut inverse = vec![0; self.n];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        let mut out = self.clone();
        out.g = self.g.select_rows(&inverse);
        out.assignments = inverse.iter().map(|&i| self.assignments[i].clone()).collect();
        if let Some(parts) = &self.brs {
            out.brs = Some(BrsParts {
                points: parts.points.subset(&inverse)?,
                coefficients: parts.coefficients.clone(),
                vandermonde: parts.vandermonde.select_rows(&inverse),
                mask: parts.mask.select_rows(&inverse),
            });
        }
        Ok(out)
    }

    fn check_responders(&self, responders: &[usize]) -> Result<Vec<usize>> {
        let sorted: Vec<usize> = responders.iter().copied().sorted().dedup().collect();
        if sorted.len() != responders.len() || sorted.last().is_some_and(|&i| i >= self.n) {
            return Err(Error::InvalidInput(format!(
                "responders must be distinct server indices below {}",
                self.n
            )));
        }
        Ok(sorted)
    }

    /// Decoding vector for the responding set under the scheme's decoder.
    pub fn decoding_vector(&self, responders: &[usize]) -> Result<DecodingVector> {
        let responders = self.check_responders(responders)?;
        let zero = Scalar::new(0.0, 0.0);
        let mut a = vec![zero; self.n];
        let mut degenerate = false;
        match &self.decoder {
            DecoderKind::ExactFrc => {
                for j in 0..self.k {
                    if let Some(&i) = responders.iter().find(|&&i| self.assignments[i].contains(&j)) {
                        a[i] = Scalar::new(1.0, 0.0);
                    }
                }
            }
            DecoderKind::ExactBrs => {
                let parts = self.brs.as_ref().expect("BRS decoder carries its points");
                if responders.len() < self.k {
                    return Err(Error::InsufficientResponses {
                        needed: self.k,
                        got: responders.len(),
                    });
                }
                let chosen = &responders[..self.k];
                let pts: Vec<Scalar> = chosen.iter().map(|&i| parts.points.get(i)).collect();
                for (&i, c) in chosen.iter().zip(decoding_row(&pts)?) {
                    a[i] = c;
                }
            }
            DecoderKind::OneStep { rho } => {
                for &i in &responders {
                    a[i] = Scalar::new(*rho, 0.0);
                }
            }
            DecoderKind::Expander => {
                let c = self.n as f64 / responders.len().max(1) as f64;
                for &i in &responders {
                    a[i] = Scalar::new(c, 0.0);
                }
            }
            DecoderKind::OptimalLsq => {
                let opt = optimal_decoder(&self.g, &responders)?;
                a = opt.a;
                degenerate = opt.degenerate;
            }
        }
        Ok(DecodingVector {
            a,
            responders,
            degenerate,
        })
    }

    /// `||a_I^T G_I - target||_2` for any responding set.
    pub fn residual(&self, responders: &[usize]) -> Result<f64> {
        let dv = self.decoding_vector(responders)?;
        Ok(combination_residual(&self.g, &dv.a, &self.target))
    }
}

fn combination_residual(g: &Matrix, a: &[Scalar], target: &[f64]) -> f64 {
    (0..g.cols())
        .map(|j| {
            let v: Scalar = (0..g.rows()).map(|i| a[i] * g.get(i, j)).sum();
            (v - target[j]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Least-squares decoding vector `a_I = 1 G_I^+`, embedded into length `n`.
pub fn optimal_decoder(g: &Matrix, responders: &[usize]) -> Result<DecodingVector> {
    if responders.iter().any(|&i| i >= g.rows()) {
        return Err(Error::InvalidInput("responder index out of range".into()));
    }
    let gi = g.select_rows(responders);
    let mut a = vec![Scalar::new(0.0, 0.0); g.rows()];
    let degenerate = gi.max_abs() == 0.0;
    if !degenerate {
        let coeffs = &Matrix::from_fn_real(1, g.cols(), |_, _| 1.0) * &pseudoinverse(&gi);
        for (c, &i) in responders.iter().enumerate() {
            a[i] = coeffs.get(0, c);
        }
    }
    Ok(DecodingVector {
        a,
        responders: responders.to_vec(),
        degenerate,
    })
}

/// Constant-coefficient decoding vector `rho` on the responders.
pub fn one_step_decoder(n: usize, responders: &[usize], rho: f64) -> DecodingVector {
    let mut a = vec![Scalar::new(0.0, 0.0); n];
    for &i in responders {
        a[i] = Scalar::new(rho, 0.0);
    }
    DecodingVector {
        a,
        responders: responders.to_vec(),
        degenerate: false,
    }
}

/// Error `||a^T G - target||_2` of an arbitrary decoding vector.
pub fn decoding_error(scheme: &GCScheme, dv: &DecodingVector) -> f64 {
    combination_residual(&scheme.g, &dv.a, &scheme.target)
}

/// Decoding error for a responding set of the designed size `n - s`.
pub fn gc_error(scheme: &GCScheme, responders: &[usize]) -> Result<f64> {
    if responders.len() != scheme.threshold() {
        return Err(Error::InvalidParameter(format!(
            "expected {} responders, got {}",
            scheme.threshold(),
            responders.len()
        )));
    }
    scheme.residual(responders)
}

/// Number of straggler sets above which [`gc_max_error`] samples.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;
/// Straggler sets drawn in sampled mode.
pub const SAMPLED_SETS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxError {
    pub error: f64,
    /// Straggler set attaining `error`; the lexicographically first on ties.
    pub stragglers: Vec<usize>,
    pub mode: SearchMode,
    pub sets_evaluated: usize,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn complement(n: usize, stragglers: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !stragglers.contains(i)).collect()
}

pub(crate) fn worst_over<I>(scheme: &GCScheme, sets: I, mode: SearchMode) -> Result<MaxError>
where
    I: IntoIterator<Item = Vec<usize>>,
{
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut count = 0;
    for stragglers in sets {
        count += 1;
        let e = scheme.residual(&complement(scheme.n, &stragglers))?;
        if best.as_ref().is_none_or(|(b, _)| e > *b) {
            best = Some((e, stragglers));
        }
    }
    let (error, stragglers) = best.unwrap_or((0.0, Vec::new()));
    Ok(MaxError {
        error,
        stragglers,
        mode,
        sets_evaluated: count,
    })
}

/// Worst decoding error over straggler sets of size `s`.
///
/// Enumerates every set when there are at most [`EXHAUSTIVE_LIMIT`] of them
/// and otherwise evaluates [`SAMPLED_SETS`] uniformly drawn sets.
pub fn gc_max_error(scheme: &GCScheme, s: usize) -> Result<MaxError> {
    let n = scheme.n;
    if s >= n {
        return Err(Error::InvalidParameter(format!("s = {s} must be below n = {n}")));
    }
    if binomial(n, s) <= EXHAUSTIVE_LIMIT {
        worst_over(scheme, (0..n).combinations(s), SearchMode::Exhaustive)
    } else {
        let mut rng = substream(0, "gc-max-error", s as u64);
        let sets = (0..SAMPLED_SETS).map(move |_| sample(&mut rng, n, s).into_iter().sorted().collect());
        worst_over(scheme, sets, SearchMode::Sampled)
    }
}
