use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcode::GCScheme;
use crate::linalg::{spectral_norm, split_rows, Matrix};
use crate::rng::derive_seed;
use crate::simulator::model::{ServerModel, StragglerPolicy};
use crate::simulator::round::{run_round, GradientJob};

/// `||A x - b||^2`.
pub fn least_squares_loss(a: &Matrix, b: &Matrix, x: &Matrix) -> f64 {
    (&(a * x) - b).frobenius_norm().powi(2)
}

/// `2 A^T (A x - b)`.
pub fn least_squares_gradient(a: &Matrix, b: &Matrix, x: &Matrix) -> Matrix {
    (&a.adjoint() * &(&(a * x) - b)).scale(2.0)
}

/// Gradients of the `k` row blocks of the least-squares loss; they sum to
/// the full gradient.
pub fn partial_gradients(a: &Matrix, b: &Matrix, k: usize, x: &Matrix) -> Result<Vec<Matrix>> {
    if a.rows() != b.rows() || a.cols() != x.rows() || b.cols() != x.cols() {
        return Err(Error::InvalidInput(format!(
            "shapes A {:?}, b {:?}, x {:?} do not fit",
            a.shape(),
            b.shape(),
            x.shape()
        )));
    }
    let a_parts = split_rows(a, k)?;
    let b_parts = split_rows(b, k)?;
    Ok(a_parts
        .iter()
        .zip(&b_parts)
        .map(|(ap, bp)| least_squares_gradient(ap, bp, x))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub step_size: f64,
    pub iterations: usize,
    /// Starting point; zeros when absent.
    pub x0: Option<Vec<f64>>,
}

impl GdConfig {
    pub fn new(step_size: f64, iterations: usize) -> Result<Self> {
        if !(step_size > 0.0 && step_size.is_finite()) || iterations == 0 {
            return Err(Error::InvalidParameter(format!(
                "need a positive step size and at least one iteration, got ({step_size}, {iterations})"
            )));
        }
        Ok(Self {
            step_size,
            iterations,
            x0: None,
        })
    }

    pub(crate) fn start(&self, d: usize) -> Result<Matrix> {
        match &self.x0 {
            Some(v) if v.len() != d => Err(Error::InvalidInput(format!("x0 has {} entries, need {d}", v.len()))),
            Some(v) => Ok(Matrix::column(v)),
            None => Ok(Matrix::zeros(d, 1)),
        }
    }
}

/// Largest step for which gradient descent on `||A x - b||^2` contracts.
pub fn max_stable_step(a: &Matrix) -> f64 {
    1.0 / spectral_norm(a).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdHistory {
    /// `x^[0] .. x^[T]`.
    pub iterates: Vec<Matrix>,
    /// Loss at each iterate.
    pub losses: Vec<f64>,
    /// Relative error of the gradient used at each step.
    pub gradient_errors: Vec<f64>,
    /// Simulated time at which each step's gradient became available.
    pub decode_times: Vec<f64>,
    /// Step size at or beyond the contraction limit.
    pub unstable_step: bool,
    /// Iteration at which an unrecoverable round stopped the run.
    pub aborted_at: Option<usize>,
}

impl GdHistory {
    pub(crate) fn start(a: &Matrix, b: &Matrix, x0: Matrix, step: f64) -> Self {
        let unstable_step = step >= max_stable_step(a);
        if unstable_step {
            log::warn!("step size {step} does not guarantee contraction (limit {})", max_stable_step(a));
        }
        Self {
            losses: vec![least_squares_loss(a, b, &x0)],
            iterates: vec![x0],
            gradient_errors: Vec::new(),
            decode_times: Vec::new(),
            unstable_step,
            aborted_at: None,
        }
    }

    pub(crate) fn push(&mut self, a: &Matrix, b: &Matrix, grad: &Matrix, exact: &Matrix, step: f64, time: f64) {
        let x = self.iterates.last().expect("history starts with x0");
        let next = &x.clone() - &grad.scale(step);
        self.gradient_errors.push(grad.relative_error(exact));
        self.decode_times.push(time);
        self.losses.push(least_squares_loss(a, b, &next));
        self.iterates.push(next);
    }

    pub fn final_iterate(&self) -> &Matrix {
        self.iterates.last().expect("history starts with x0")
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("history starts with x0")
    }
}

/// Straggler-free gradient descent on a single machine.
pub fn centralized_gradient_descent(a: &Matrix, b: &Matrix, gd: &GdConfig) -> Result<GdHistory> {
    let mut hist = GdHistory::start(a, b, gd.start(a.cols())?, gd.step_size);
    for t in 0..gd.iterations {
        let g = least_squares_gradient(a, b, hist.final_iterate());
        hist.push(a, b, &g, &g, gd.step_size, t as f64);
    }
    Ok(hist)
}

/// Distributed gradient descent: each step runs one simulated round of the
/// gradient code and moves along the decoded gradient.
pub fn gradient_descent(
    a: &Matrix,
    b: &Matrix,
    scheme: &GCScheme,
    gd: &GdConfig,
    model: &ServerModel,
    policy: &StragglerPolicy,
    seed: u64,
) -> Result<GdHistory> {
    let mut hist = GdHistory::start(a, b, gd.start(a.cols())?, gd.step_size);
    let mut clock = 0.0;
    for t in 0..gd.iterations {
        let x = hist.final_iterate().clone();
        let parts = partial_gradients(a, b, scheme.partitions(), &x)?;
        let job = GradientJob::new(scheme, &parts)?;
        let trace = run_round(&job, model, policy, derive_seed(seed, "gd-round", t as u64))?;
        let (Some(grad), Some(time)) = (trace.output, trace.decode_time) else {
            hist.aborted_at = Some(t);
            return Ok(hist);
        };
        clock += time;
        let exact = least_squares_gradient(a, b, &x);
        hist.push(a, b, &grad, &exact, gd.step_size, clock);
    }
    Ok(hist)
}

/// Minimizer of `||A x - b||^2` through the normal equations.
pub fn least_squares_solution(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let gram = &a.adjoint() * a;
    let rhs = &a.adjoint() * b;
    let lu = crate::linalg::Lu::factor(&gram)?;
    Ok(lu.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcode::{brs_default, expander_scheme, gc_error, petersen_graph};
    use crate::rng::substream;
    use crate::simulator::round::RoundJob;

    fn instance(n: usize, d: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = substream(seed, "descent-test", 0);
        (Matrix::standard_normal(n, d, &mut rng), Matrix::standard_normal(n, 1, &mut rng))
    }

    #[test]
    fn partial_gradients_sum_to_full() {
        let (a, b) = instance(24, 3, 1);
        let x = Matrix::column(&[0.5, -0.2, 1.0]);
        let full = least_squares_gradient(&a, &b, &x);
        for k in [1, 2, 4, 8] {
            let parts = partial_gradients(&a, &b, k, &x).unwrap();
            let mut sum = Matrix::zeros(3, 1);
            for p in &parts {
                sum = &sum + p;
            }
            assert!((&sum - &full).max_abs() <= 1e-10);
        }
        let xs = least_squares_solution(&a, &b).unwrap();
        assert!(least_squares_gradient(&a, &b, &xs).max_abs() < 1e-10);
        assert!(partial_gradients(&a, &b, 5, &x).is_err());
    }

    #[test]
    fn identity_system_converges_to_b() {
        let a = Matrix::identity(3);
        let b = Matrix::column(&[1.0, -2.0, 3.0]);
        let hist = centralized_gradient_descent(&a, &b, &GdConfig::new(0.25, 10).unwrap()).unwrap();
        for (t, x) in hist.iterates.iter().enumerate() {
            let want = b.scale(1.0 - 0.5f64.powi(t as i32));
            assert!((x - &want).max_abs() < 1e-12);
        }
        assert!(!hist.unstable_step);
        let one_step = centralized_gradient_descent(&a, &b, &GdConfig::new(0.5, 3).unwrap()).unwrap();
        assert!((one_step.final_iterate() - &b).max_abs() < 1e-12);
        assert!(centralized_gradient_descent(&a, &b, &GdConfig::new(1.0, 1).unwrap()).unwrap().unstable_step);
    }

    #[test]
    fn exact_code_tracks_centralized_descent() {
        let (a, b) = instance(32, 4, 2);
        let gd = GdConfig::new(0.5 * max_stable_step(&a), 100).unwrap();
        let central = centralized_gradient_descent(&a, &b, &gd).unwrap();
        let scheme = brs_default(8, 4, 2).unwrap();
        let model = ServerModel::homogeneous(8).unwrap();
        let coded = gradient_descent(&a, &b, &scheme, &gd, &model, &StragglerPolicy::DelayOrder, 3).unwrap();
        assert_eq!(coded.iterates.len(), 101);
        for (x, y) in coded.iterates.iter().zip(&central.iterates) {
            assert!((x - y).max_abs() <= 1e-8);
        }
    }

    #[test]
    fn expander_gradient_error_matches_code_error() {
        let (a, b) = instance(40, 2, 4);
        let scheme = expander_scheme(&petersen_graph(), 3, 1).unwrap();
        let model = ServerModel::homogeneous(10).unwrap();
        let x = Matrix::column(&[0.1, 0.2]);
        let parts = partial_gradients(&a, &b, 10, &x).unwrap();
        let job = GradientJob::new(&scheme, &parts).unwrap();
        let stacked = Matrix::hstack(&parts).unwrap();
        for seed in 0..10 {
            let trace = run_round(&job, &model, &StragglerPolicy::DelayOrder, seed).unwrap();
            let responders: Vec<usize> = trace.arrivals[..trace.consumed].iter().map(|a| a.server).collect();
            let code_err = gc_error(&scheme, &responders).unwrap();
            let abs_err = (trace.output.as_ref().unwrap() - &job.target()).frobenius_norm();
            assert!(abs_err <= code_err * crate::linalg::spectral_norm(&stacked) + 1e-12);
        }
    }

    #[test]
    fn unrecoverable_round_aborts() {
        let (a, b) = instance(8, 2, 5);
        let scheme = crate::gradcode::frc_scheme(4, 1).unwrap();
        let model = ServerModel::homogeneous(4).unwrap();
        let gd = GdConfig::new(0.01, 5).unwrap();
        let hist = gradient_descent(&a, &b, &scheme, &gd, &model, &StragglerPolicy::FixedSet(vec![2, 3]), 0).unwrap();
        assert_eq!(hist.aborted_at, Some(0));
        assert_eq!(hist.iterates.len(), 1);
    }
}
