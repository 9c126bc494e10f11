use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use codedlab_core::codedmm::{
    coded_independent_sampling, coded_setwise_sampling, entangled_example, matdot, oversketch, polynomial_code,
    weighted_cr_cmm, CMMScheme,
};
use codedlab_core::gradcode::{
    bernoulli_scheme, bibd_scheme, binomial, brs_default, complete_design, complete_graph, expander_scheme, fano_plane,
    frc_scheme, gc_error, gc_max_error, petersen_graph, random_regular_graph, GCScheme, EXHAUSTIVE_LIMIT,
};
use codedlab_core::linalg::{roots_of_unity, EvalPoints};
use codedlab_core::rng::{derive_seed, substream};
use codedlab_core::simulator::{
    centralized_gradient_descent, gradient_descent, iterative_sketching_gc, least_squares_loss,
    least_squares_solution, max_stable_step, run_round, DelayLaw, GdConfig, GdHistory, GradientJob,
    ReplicationPlan, RoundJob, RoundTrace, ServerModel, StragglerPolicy,
};
use codedlab_core::sketch::{
    amm_error, block_cr_distribution, countsketch_operator, cr_distribution, gaussian_sketch, row_sampling_sketch,
    srht, BlockWeighting, NormKind, SamplingDistribution, SketchOperator,
};
use codedlab_core::{Error, Matrix, Result};

use crate::config::{
    CmmScheme, CmmSpec, DelaySpec, DescendScheme, DescendSpec, Design, Experiment, ExperimentConfig, GcScheme,
    GcSpec, Graph, Points, PolicySpec, SimSpec, SketchMethod, SketchSpec, Sweep,
};

/// Metric name marking a round that could not be decoded.
pub const UNRECOVERABLE: &str = "unrecoverable";

/// One measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    /// `(axis, value)` pairs locating the measurement in the grid.
    pub axes: Vec<(String, String)>,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
    /// Simulated clock when the measurement comes from a simulated round.
    pub time: Option<f64>,
}

struct Rows {
    experiment: String,
    seed: u64,
    rows: Vec<ResultRow>,
}

impl Rows {
    fn new(experiment: String, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, axes: &[(&str, String)], metric: &str, value: f64, time: Option<f64>) {
        self.rows.push(ResultRow {
            experiment: self.experiment.clone(),
            axes: axes.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            metric: metric.into(),
            value,
            seed: self.seed,
            time,
        });
    }
}

/// Run an experiment; rows come back in grid order.
pub fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let seed = config.seed;
    let rows = match &config.experiment {
        Experiment::Gc { code, sweep, dim } => run_gc(code, sweep, *dim, seed)?,
        Experiment::Cmm { code, sweep } => run_cmm(code, sweep, seed)?,
        Experiment::Sketch(spec) => run_sketch(spec, seed)?,
        Experiment::Descend(spec) => run_descend(spec, seed)?,
        Experiment::Report(code) => run_report(code, seed)?,
    };
    if let Some(bad) = rows.iter().find(|r| !r.value.is_finite()) {
        return Err(Error::InvalidInput(format!("metric `{}` is not finite", bad.metric)));
    }
    Ok(rows)
}

pub fn has_unrecoverable(rows: &[ResultRow]) -> bool {
    rows.iter().any(|r| r.metric == UNRECOVERABLE)
}

fn gaussian(rows: usize, cols: usize, seed: u64, name: &str) -> Matrix {
    Matrix::standard_normal(rows, cols, &mut substream(seed, name, 0))
}

fn set_label(set: &[usize]) -> String {
    set.iter().join(" ")
}

fn straggler_sets(n: usize, s: usize) -> Result<Vec<Vec<usize>>> {
    let count = binomial(n, s);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::BudgetExceeded {
            count,
            budget: EXHAUSTIVE_LIMIT,
        });
    }
    Ok((0..n).combinations(s).collect())
}

pub fn build_gc(spec: &GcSpec, seed: u64) -> Result<GCScheme> {
    let (n, s) = (spec.n, spec.s);
    match &spec.scheme {
        GcScheme::Frc => frc_scheme(n, s),
        GcScheme::Brs { k } => brs_default(n, *k, s),
        GcScheme::Bernoulli { k } => bernoulli_scheme(n, *k, s, derive_seed(seed, "bernoulli", 0)),
        GcScheme::Expander { graph } => {
            let (adj, degree) = match graph {
                Graph::Petersen => (petersen_graph(), 3),
                Graph::Complete { n } => (complete_graph(*n), n.saturating_sub(1)),
                Graph::Random { n, degree } => (random_regular_graph(*n, *degree, derive_seed(seed, "graph", 0))?, *degree),
            };
            expander_scheme(&adj, degree, s)
        }
        GcScheme::Bibd { design } => {
            let incidence = match design {
                Design::Fano => fano_plane(),
                Design::Complete { v } => complete_design(*v),
            };
            bibd_scheme(&incidence, 1, s)
        }
    }
}

fn server_model(sim: &SimSpec, n: usize) -> Result<ServerModel> {
    let delay = match &sim.delay {
        DelaySpec::ShiftedExponential { shift, rate } => DelayLaw::ShiftedExponential {
            shift: *shift,
            rate: *rate,
        },
        DelaySpec::Deterministic { delays } => DelayLaw::Deterministic(delays.clone()),
    };
    ServerModel::new(n, delay, sim.heterogeneity.clone().unwrap_or_else(|| vec![1.0; n]))
}

fn policy(sim: &SimSpec) -> StragglerPolicy {
    match &sim.policy {
        PolicySpec::Delay => StragglerPolicy::DelayOrder,
        PolicySpec::Fixed { stragglers } => StragglerPolicy::FixedSet(stragglers.clone()),
        PolicySpec::Adversarial { s } => StragglerPolicy::AdversarialExhaustive(*s),
    }
}

fn record_trace(rows: &mut Rows, axes: &[(&str, String)], trace: &RoundTrace) {
    match (trace.error, trace.decode_time) {
        (Some(err), Some(t)) => {
            rows.push(axes, "error", err, Some(t));
            rows.push(axes, "decode_time", t, Some(t));
        }
        _ => rows.push(axes, UNRECOVERABLE, 1.0, None),
    }
}

fn run_gc(spec: &GcSpec, sweep: &Sweep, dim: usize, seed: u64) -> Result<Vec<ResultRow>> {
    let scheme = build_gc(spec, seed)?;
    let mut rows = Rows::new(format!("gc-{}", scheme.name()), seed);
    match sweep {
        Sweep::All => {
            let sets = straggler_sets(scheme.servers(), spec.s)?;
            let errors: Vec<Result<f64>> = sets
                .par_iter()
                .map(|set| {
                    let responders: Vec<usize> = (0..scheme.servers()).filter(|i| !set.contains(i)).collect();
                    gc_error(&scheme, &responders)
                })
                .collect();
            for (set, err) in sets.iter().zip(errors) {
                rows.push(&[("stragglers", set_label(set))], "error", err?, None);
            }
        }
        Sweep::Rounds { rounds, sim } => {
            let model = server_model(sim, scheme.servers())?;
            let policy = policy(sim);
            let traces: Vec<Result<RoundTrace>> = (0..*rounds)
                .into_par_iter()
                .map(|r| {
                    let mut rng = substream(seed, "partial-gradients", r as u64);
                    let partials: Vec<Matrix> =
                        (0..scheme.partitions()).map(|_| Matrix::standard_normal(dim, 1, &mut rng)).collect();
                    let job = GradientJob::new(&scheme, &partials)?;
                    run_round(&job, &model, &policy, derive_seed(seed, "round", r as u64))
                })
                .collect();
            for (r, trace) in traces.into_iter().enumerate() {
                record_trace(&mut rows, &[("round", r.to_string())], &trace?);
            }
        }
    }
    Ok(rows.rows)
}

fn eval_points(kind: Points, n: usize) -> Result<EvalPoints> {
    match kind {
        Points::Unity => roots_of_unity(n),
        Points::Real if n == 1 => EvalPoints::from_real(&[0.0]),
        Points::Real => EvalPoints::from_real(&(0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect::<Vec<_>>()),
    }
}

pub fn build_cmm(spec: &CmmSpec, seed: u64) -> Result<CMMScheme> {
    let a = gaussian(spec.rows, spec.inner, seed, "cmm-a");
    let b = gaussian(spec.inner, spec.cols, seed, "cmm-b");
    let points = eval_points(spec.points, spec.n)?;
    let sample_seed = derive_seed(seed, "cmm-sample", 0);
    let scheme = match spec.scheme {
        CmmScheme::Matdot { k } => matdot(&a, &b, k, &points)?,
        CmmScheme::Polynomial { k } => polynomial_code(&a, &b, k, 1, k, &points)?,
        CmmScheme::Entangled => entangled_example(&a, &b, &points)?,
        CmmScheme::Independent { k, r } => {
            let dist = block_cr_distribution(&a, &b, k, BlockWeighting::Norm)?;
            coded_independent_sampling(&a, &b, k, r, &dist, &points, sample_seed)?
        }
        CmmScheme::Setwise { k, r } => coded_setwise_sampling(&a, &b, k, r, &points, sample_seed)?,
        CmmScheme::Weighted { k, r } => weighted_cr_cmm(&a, &b, k, r, &points, sample_seed)?,
        CmmScheme::Oversketch { q, block, e } => oversketch(&a, &b, q, block, e, sample_seed)?,
    };
    if scheme.servers() != spec.n {
        return Err(Error::InvalidParameter(format!(
            "scheme {} uses {} servers but n = {}",
            scheme.name(),
            scheme.servers(),
            spec.n
        )));
    }
    Ok(scheme)
}

fn run_cmm(spec: &CmmSpec, sweep: &Sweep, seed: u64) -> Result<Vec<ResultRow>> {
    let scheme = build_cmm(spec, seed)?;
    let n = scheme.servers();
    let mut rows = Rows::new(format!("cmm-{}", scheme.name()), seed);
    match sweep {
        Sweep::All => {
            let s = spec.s.unwrap_or(n.saturating_sub(scheme.threshold()));
            let sets = straggler_sets(n, s)?;
            let outputs: Vec<Matrix> = (0..n).into_par_iter().map(|i| RoundJob::compute(&scheme, i)).collect();
            let target = scheme.product().clone();
            let results: Vec<Result<Option<f64>>> = sets
                .par_iter()
                .map(|set| {
                    let responses: Vec<(usize, Matrix)> =
                        (0..n).filter(|i| !set.contains(i)).map(|i| (i, outputs[i].clone())).collect();
                    let ids: Vec<usize> = responses.iter().map(|r| r.0).collect();
                    if !RoundJob::can_decode(&scheme, &ids) {
                        return Ok(None);
                    }
                    Ok(Some(RoundJob::decode(&scheme, &responses)?.relative_error(&target)))
                })
                .collect();
            for (set, res) in sets.iter().zip(results) {
                let axes = [("stragglers", set_label(set))];
                match res? {
                    Some(err) => rows.push(&axes, "error", err, None),
                    None => rows.push(&axes, UNRECOVERABLE, 1.0, None),
                }
            }
        }
        Sweep::Rounds { rounds, sim } => {
            let model = server_model(sim, n)?;
            let policy = policy(sim);
            let traces: Vec<Result<RoundTrace>> = (0..*rounds)
                .into_par_iter()
                .map(|r| run_round(&scheme, &model, &policy, derive_seed(seed, "round", r as u64)))
                .collect();
            for (r, trace) in traces.into_iter().enumerate() {
                record_trace(&mut rows, &[("round", r.to_string())], &trace?);
            }
        }
    }
    Ok(rows.rows)
}

fn sketch_operator(method: SketchMethod, dist: &SamplingDistribution, uniform: &SamplingDistribution, inner: usize, q: usize, seed: u64) -> Result<SketchOperator> {
    match method {
        SketchMethod::Cr => row_sampling_sketch(dist, q, seed),
        SketchMethod::Uniform => row_sampling_sketch(uniform, q, seed),
        SketchMethod::Gaussian => gaussian_sketch(q, inner, seed),
        SketchMethod::Countsketch => countsketch_operator(inner, q, seed),
        SketchMethod::Srht => srht(q, inner, seed),
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[m - 1] + values[m]) / 2.0
    } else {
        values[m]
    }
}

fn run_sketch(spec: &SketchSpec, seed: u64) -> Result<Vec<ResultRow>> {
    let a = gaussian(spec.rows, spec.inner, seed, "sketch-a");
    let b = gaussian(spec.inner, spec.cols, seed, "sketch-b");
    let scale = a.frobenius_norm() * b.frobenius_norm();
    let dist = cr_distribution(&a, &b)?;
    let uniform = SamplingDistribution::uniform(spec.inner)?;
    let method = format!("{:?}", spec.method).to_lowercase();
    let mut rows = Rows::new(format!("sketch-{method}"), seed);
    let grid: Vec<(usize, usize)> = spec.q.iter().flat_map(|&q| (0..spec.trials).map(move |t| (q, t))).collect();
    let samples: Vec<Result<(f64, Option<f64>)>> = grid
        .par_iter()
        .map(|&(q, t)| {
            let trial_seed = derive_seed(derive_seed(seed, "sketch-q", q as u64), "sketch-trial", t as u64);
            let s = sketch_operator(spec.method, &dist, &uniform, spec.inner, q, trial_seed)?;
            let frob = amm_error(&a, &b, &s, NormKind::Frobenius)? / scale;
            let spectral = match spec.epsilon {
                Some(_) => Some(amm_error(&a, &b, &s, NormKind::Spectral)? / scale),
                None => None,
            };
            Ok((frob, spectral))
        })
        .collect();
    let samples: Vec<(f64, Option<f64>)> = samples.into_iter().collect::<Result<_>>()?;
    for (qi, chunk) in samples.chunks(spec.trials).enumerate() {
        let axes = [("q", spec.q[qi].to_string())];
        let mut errs: Vec<f64> = chunk.iter().map(|c| c.0).collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        rows.push(&axes, "median_error", median(&mut errs), None);
        rows.push(&axes, "mean_error", mean, None);
        if let Some(eps) = spec.epsilon {
            let hits = chunk.iter().filter(|c| c.1.is_some_and(|e| e <= eps)).count();
            rows.push(&axes, "success_rate", hits as f64 / spec.trials as f64, None);
        }
    }
    Ok(rows.rows)
}

/// Random regression instance `b = A x + noise` for a descent experiment.
pub fn regression_instance(rows: usize, cols: usize, noise: f64, seed: u64) -> (Matrix, Matrix) {
    let mut rng = substream(seed, "regression", 0);
    let a = Matrix::standard_normal(rows, cols, &mut rng);
    let x = Matrix::standard_normal(cols, 1, &mut rng);
    let e = Matrix::standard_normal(rows, 1, &mut rng);
    let b = &(&a * &x) + &e.scale(noise);
    (a, b)
}

fn run_descend(spec: &DescendSpec, seed: u64) -> Result<Vec<ResultRow>> {
    let (a, b) = regression_instance(spec.rows, spec.cols, spec.noise, seed);
    let gd = GdConfig::new(spec.step_scale * max_stable_step(&a), spec.iterations)?;
    let (name, hist): (String, GdHistory) = match &spec.scheme {
        DescendScheme::Centralized => ("centralized".into(), centralized_gradient_descent(&a, &b, &gd)?),
        DescendScheme::Coded(code) => {
            let scheme = build_gc(code, seed)?;
            let model = server_model(&spec.sim, scheme.servers())?;
            let hist = gradient_descent(&a, &b, &scheme, &gd, &model, &policy(&spec.sim), seed)?;
            (scheme.name().to_string(), hist)
        }
        DescendScheme::Sketching { k, n, s } => {
            if spec.sim.policy != PolicySpec::Delay {
                return Err(Error::InvalidParameter(
                    "iterative sketching aggregates the fastest responses; only policy = delay applies".into(),
                ));
            }
            let plan = ReplicationPlan::leverage(&a, *k, *n, n - s)?;
            let model = server_model(&spec.sim, *n)?;
            ("sketching".into(), iterative_sketching_gc(&a, &b, &plan, &gd, &model, seed)?)
        }
    };
    let optimum = least_squares_loss(&a, &b, &least_squares_solution(&a, &b)?);
    let mut rows = Rows::new(format!("descend-{name}"), seed);
    rows.push(&[("iteration", "0".into())], "loss", hist.losses[0], Some(0.0));
    for t in 1..hist.losses.len() {
        let axes = [("iteration", t.to_string())];
        let time = Some(hist.decode_times[t - 1]);
        rows.push(&axes, "loss", hist.losses[t], time);
        rows.push(&axes, "gradient_error", hist.gradient_errors[t - 1], time);
    }
    let last = hist.losses.len() - 1;
    if let Some(t) = hist.aborted_at {
        rows.push(&[("iteration", (t + 1).to_string())], UNRECOVERABLE, 1.0, None);
    }
    rows.push(&[("iteration", last.to_string())], "loss_ratio", hist.final_loss() / optimum, None);
    Ok(rows.rows)
}

fn run_report(spec: &GcSpec, seed: u64) -> Result<Vec<ResultRow>> {
    let scheme = build_gc(spec, seed)?;
    let mut rows = Rows::new(format!("report-{}", scheme.name()), seed);
    let axes = [("scheme", scheme.name().to_string())];
    rows.push(&axes, "servers", scheme.servers() as f64, None);
    rows.push(&axes, "partitions", scheme.partitions() as f64, None);
    rows.push(&axes, "stragglers", scheme.stragglers() as f64, None);
    rows.push(&axes, "threshold", scheme.threshold() as f64, None);
    rows.push(&axes, "row_weight", scheme.row_weight() as f64, None);
    rows.push(&axes, "column_weight", scheme.column_weight() as f64, None);
    rows.push(&axes, "worst_error", gc_max_error(&scheme, spec.s)?.error, None);
    if let Some(sp) = scheme.spectrum() {
        rows.push(&axes, "spectral_gap_bound", sp.error_bound(scheme.servers(), spec.s), None);
    }
    Ok(rows.rows)
}
