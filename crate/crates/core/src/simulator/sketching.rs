use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rank, split_rows, Lu, Matrix};
use crate::rng::derive_seed;
use crate::simulator::descent::{least_squares_gradient, GdConfig, GdHistory};
use crate::simulator::model::{ServerModel, StragglerPolicy};
use crate::simulator::round::{run_round, RoundJob};
use crate::sketch::{block_leverage_distribution, SketchOperator};

/// Assignment of data blocks to servers for decoding-free sketched descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationPlan {
    /// Number of servers holding each block.
    pub multiplicities: Vec<usize>,
    /// Block held by each server.
    pub server_block: Vec<usize>,
    /// Responses aggregated per iteration.
    pub threshold: usize,
}

/// Largest-remainder rounding of `total * p_j`, with every part at least 1.
fn apportion(probs: &[f64], total: usize) -> Vec<usize> {
    let k = probs.len();
    let spare = total - k;
    let quotas: Vec<f64> = probs.iter().map(|p| p * spare as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut left = spare - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| (quotas[j] - quotas[j].floor()).total_cmp(&(quotas[i] - quotas[i].floor())).then(i.cmp(&j)));
    for &j in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[j] += 1;
        left -= 1;
    }
    counts.iter().map(|c| c + 1).collect()
}

impl ReplicationPlan {
    pub fn from_multiplicities(multiplicities: Vec<usize>, threshold: usize) -> Result<Self> {
        if multiplicities.is_empty() || multiplicities.contains(&0) {
            return Err(Error::InvalidParameter("every block needs at least one server".into()));
        }
        let n: usize = multiplicities.iter().sum();
        if threshold == 0 || threshold > n {
            return Err(Error::InvalidParameter(format!("threshold {threshold} outside 1..={n}")));
        }
        let server_block = multiplicities
            .iter()
            .enumerate()
            .flat_map(|(j, &m)| std::iter::repeat_n(j, m))
            .collect();
        Ok(Self {
            multiplicities,
            server_block,
            threshold,
        })
    }

    /// One server per block.
    pub fn single_copy(k: usize, threshold: usize) -> Result<Self> {
        Self::from_multiplicities(vec![1; k], threshold)
    }

    /// `n` servers split over the `k` row blocks of `a` in proportion to
    /// their block leverage scores.
    pub fn leverage(a: &Matrix, k: usize, n: usize, threshold: usize) -> Result<Self> {
        if n < k {
            return Err(Error::InvalidParameter(format!("{n} servers cannot cover {k} blocks")));
        }
        let dist = block_leverage_distribution(a, k)?;
        Self::from_multiplicities(apportion(dist.probs(), n), threshold)
    }

    pub fn servers(&self) -> usize {
        self.server_block.len()
    }

    pub fn blocks(&self) -> usize {
        self.multiplicities.len()
    }

    /// Weight applied to server `i`'s block objective, so that the sum over
    /// a uniformly random set of `threshold` servers is unbiased.
    pub fn weight(&self, server: usize) -> f64 {
        let m = self.multiplicities[self.server_block[server]];
        self.servers() as f64 / (self.threshold * m) as f64
    }

    /// Row sketch whose objective `||S (A x - b)||^2` matches the aggregate
    /// of the given responders.
    pub fn realized_sketch(&self, rows: usize, responders: &[usize]) -> Result<Matrix> {
        let k = self.blocks();
        if !rows.is_multiple_of(k) {
            return Err(Error::InvalidParameter(format!("k = {k} does not divide N = {rows}")));
        }
        let tau = rows / k;
        let mut s = Matrix::zeros(responders.len() * tau, rows);
        for (r, &i) in responders.iter().enumerate() {
            let j = self.server_block[i];
            let w = self.weight(i).sqrt();
            for t in 0..tau {
                s.set(r * tau + t, j * tau + t, w.into());
            }
        }
        Ok(s)
    }
}

/// One iteration of decoding-free sketched descent: servers return weighted
/// block gradients and the first `threshold` of them are summed.
pub struct SketchedGradientJob<'a> {
    pub plan: &'a ReplicationPlan,
    pub block_gradients: Vec<Matrix>,
    pub exact: Matrix,
}

impl<'a> SketchedGradientJob<'a> {
    pub fn new(plan: &'a ReplicationPlan, a: &Matrix, b: &Matrix, x: &Matrix) -> Result<Self> {
        let a_parts = split_rows(a, plan.blocks())?;
        let b_parts = split_rows(b, plan.blocks())?;
        let block_gradients: Vec<Matrix> = a_parts
            .iter()
            .zip(&b_parts)
            .map(|(ap, bp)| least_squares_gradient(ap, bp, x))
            .collect();
        Ok(Self {
            plan,
            block_gradients,
            exact: least_squares_gradient(a, b, x),
        })
    }
}

impl RoundJob for SketchedGradientJob<'_> {
    fn servers(&self) -> usize {
        self.plan.servers()
    }

    fn threshold(&self) -> usize {
        self.plan.threshold
    }

    fn task_cost(&self, _server: usize) -> f64 {
        1.0
    }

    fn compute(&self, server: usize) -> Matrix {
        self.block_gradients[self.plan.server_block[server]].scale(self.plan.weight(server))
    }

    fn decode(&self, responses: &[(usize, Matrix)]) -> Result<Matrix> {
        let mut acc = Matrix::zeros(self.exact.rows(), self.exact.cols());
        for (_, w) in responses.iter().take(self.plan.threshold) {
            acc = &acc + w;
        }
        Ok(acc)
    }

    fn target(&self) -> Matrix {
        self.exact.clone()
    }
}

/// Gradient descent where every step sums the first `threshold` weighted
/// block gradients; fresh delays each iteration give a fresh sketch.
pub fn iterative_sketching_gc(
    a: &Matrix,
    b: &Matrix,
    plan: &ReplicationPlan,
    gd: &GdConfig,
    model: &ServerModel,
    seed: u64,
) -> Result<GdHistory> {
    let mut hist = GdHistory::start(a, b, gd.start(a.cols())?, gd.step_size);
    let mut clock = 0.0;
    for t in 0..gd.iterations {
        let x = hist.final_iterate().clone();
        let job = SketchedGradientJob::new(plan, a, b, &x)?;
        let trace = run_round(&job, model, &StragglerPolicy::DelayOrder, derive_seed(seed, "sketch-round", t as u64))?;
        let (Some(grad), Some(time)) = (trace.output, trace.decode_time) else {
            hist.aborted_at = Some(t);
            return Ok(hist);
        };
        clock += time;
        hist.push(a, b, &grad, &job.exact, gd.step_size, clock);
    }
    Ok(hist)
}

/// `argmin ||S (A x - b)||^2` from the sketched normal equations.
pub fn sketch_and_solve_baseline(a: &Matrix, b: &Matrix, s: &SketchOperator) -> Result<Matrix> {
    let sa = s.apply(a)?;
    let sb = s.apply(b)?;
    let r = rank(&sa);
    if r < a.cols() {
        return Err(Error::RankDeficient {
            rank: r,
            expected: a.cols(),
        });
    }
    let gram = &sa.adjoint() * &sa;
    Ok(Lu::factor(&gram)?.solve(&(&sa.adjoint() * &sb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::simulator::descent::least_squares_solution;
    use crate::sketch::{leverage_distribution, row_sampling_sketch};

    fn instance(n: usize, d: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = substream(seed, "sketching-test", 0);
        (Matrix::standard_normal(n, d, &mut rng), Matrix::standard_normal(n, 1, &mut rng))
    }

    #[test]
    fn apportionment_keeps_totals() {
        assert_eq!(apportion(&[0.5, 0.25, 0.25], 7), vec![3, 2, 2]);
        assert_eq!(apportion(&[1.0, 0.0], 4), vec![3, 1]);
        assert_eq!(apportion(&[0.25; 4], 4), vec![1; 4]);
        let (a, _) = instance(64, 3, 1);
        let plan = ReplicationPlan::leverage(&a, 8, 20, 15).unwrap();
        assert_eq!(plan.servers(), 20);
        assert!(plan.multiplicities.iter().all(|&m| m >= 1));
        assert!(ReplicationPlan::leverage(&a, 8, 7, 5).is_err());
        assert!(ReplicationPlan::single_copy(4, 5).is_err());
    }

    #[test]
    fn single_copy_without_stragglers_is_exact() {
        let (a, b) = instance(32, 3, 2);
        let plan = ReplicationPlan::single_copy(4, 4).unwrap();
        let x = Matrix::column(&[1.0, 0.0, -1.0]);
        let job = SketchedGradientJob::new(&plan, &a, &b, &x).unwrap();
        let model = ServerModel::homogeneous(4).unwrap();
        let trace = run_round(&job, &model, &StragglerPolicy::DelayOrder, 1).unwrap();
        assert!(trace.error.unwrap() < 1e-12);
    }

    #[test]
    fn aggregate_is_a_sketched_gradient() {
        let (a, b) = instance(64, 3, 3);
        let plan = ReplicationPlan::leverage(&a, 8, 12, 9).unwrap();
        let model = ServerModel::homogeneous(12).unwrap();
        let x = Matrix::column(&[0.3, -0.1, 0.2]);
        let job = SketchedGradientJob::new(&plan, &a, &b, &x).unwrap();
        for seed in 0..10 {
            let trace = run_round(&job, &model, &StragglerPolicy::DelayOrder, seed).unwrap();
            let responders: Vec<usize> = trace.arrivals[..trace.consumed].iter().map(|r| r.server).collect();
            assert_eq!(responders.len(), 9);
            let s = plan.realized_sketch(64, &responders).unwrap();
            let sa = &s * &a;
            let sb = &s * &b;
            let want = least_squares_gradient(&sa, &sb, &x);
            assert!((&trace.output.unwrap() - &want).max_abs() <= 1e-8);
        }
    }

    #[test]
    fn aggregate_is_unbiased_over_subsets() {
        use itertools::Itertools;
        let (a, b) = instance(24, 2, 4);
        let plan = ReplicationPlan::leverage(&a, 4, 7, 4).unwrap();
        let x = Matrix::column(&[0.5, 0.5]);
        let job = SketchedGradientJob::new(&plan, &a, &b, &x).unwrap();
        let outputs: Vec<(usize, Matrix)> = (0..7).map(|i| (i, job.compute(i))).collect();
        let mut mean = Matrix::zeros(2, 1);
        let mut count = 0.0;
        for set in (0..7).combinations(4) {
            let chosen: Vec<(usize, Matrix)> = set.iter().map(|&i| outputs[i].clone()).collect();
            mean = &mean + &job.decode(&chosen).unwrap();
            count += 1.0;
        }
        assert!((&mean.scale(1.0 / count) - &job.exact).max_abs() < 1e-10);
    }

    #[test]
    fn sketch_and_solve_behaviour() {
        let (a, b) = instance(32, 3, 5);
        let xs = least_squares_solution(&a, &b).unwrap();
        let (q, _) = nalgebra::DMatrix::<f64>::from_fn(32, 32, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 20.0 } else { 0.0 })
            .qr()
            .unpack();
        let orth = SketchOperator::explicit(Matrix::from_fn_real(32, 32, |i, j| q[(i, j)]));
        let xh = sketch_and_solve_baseline(&a, &b, &orth).unwrap();
        assert!((&xh - &xs).max_abs() < 1e-10);

        let s = row_sampling_sketch(&leverage_distribution(&a).unwrap(), 16, 9).unwrap();
        let x1 = sketch_and_solve_baseline(&a, &b, &s).unwrap();
        let x2 = sketch_and_solve_baseline(&a, &b, &s).unwrap();
        assert_eq!(x1, x2);
        assert!((&x1 - &xs).frobenius_norm() > 1e-6);

        let thin = SketchOperator::explicit(Matrix::from_fn_real(2, 32, |i, j| if i == j { 1.0 } else { 0.0 }));
        assert!(matches!(sketch_and_solve_baseline(&a, &b, &thin), Err(Error::RankDeficient { .. })));
    }
}
