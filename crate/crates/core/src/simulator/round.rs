use std::cmp::Ordering;
use std::collections::BinaryHeap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::codedmm::{CMMScheme, ServerOutput};
use crate::error::{Error, Result};
use crate::gradcode::{binomial, GCScheme, EXHAUSTIVE_LIMIT};
use crate::linalg::Matrix;
use crate::simulator::model::{ServerModel, StragglerPolicy};

/// Anything the simulator can run for one round: `n` independent server
/// tasks and a decoder that fires once enough of them have arrived.
pub trait RoundJob {
    fn servers(&self) -> usize;

    /// Nominal number of responses decoding needs.
    fn threshold(&self) -> usize;

    /// Relative amount of work in server `i`'s task.
    fn task_cost(&self, server: usize) -> f64;

    fn compute(&self, server: usize) -> Matrix;

    fn can_decode(&self, arrived: &[usize]) -> bool {
        arrived.len() >= self.threshold()
    }

    fn decode(&self, responses: &[(usize, Matrix)]) -> Result<Matrix>;

    /// Quantity the decoded output approximates.
    fn target(&self) -> Matrix;

    /// Straggler set of size `s` maximizing the decoding error when every
    /// other server responds.
    fn worst_stragglers(&self, s: usize) -> Result<Vec<usize>> {
        let n = self.servers();
        check_budget(n, s)?;
        let outputs: Vec<Matrix> = (0..n).map(|i| self.compute(i)).collect();
        let target = self.target();
        let mut worst: Option<(f64, Vec<usize>)> = None;
        for set in (0..n).combinations(s) {
            let responses: Vec<(usize, Matrix)> =
                (0..n).filter(|i| !set.contains(i)).map(|i| (i, outputs[i].clone())).collect();
            let ids: Vec<usize> = responses.iter().map(|r| r.0).collect();
            let err = if self.can_decode(&ids) {
                self.decode(&responses).map_or(f64::INFINITY, |m| m.relative_error(&target))
            } else {
                f64::INFINITY
            };
            if worst.as_ref().is_none_or(|(w, _)| err > *w) {
                worst = Some((err, set));
            }
        }
        Ok(worst.map(|w| w.1).unwrap_or_default())
    }
}

pub(crate) fn check_budget(n: usize, s: usize) -> Result<()> {
    if s > n {
        return Err(Error::InvalidParameter(format!("s = {s} exceeds n = {n}")));
    }
    let count = binomial(n, s);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::BudgetExceeded {
            count,
            budget: EXHAUSTIVE_LIMIT,
        });
    }
    Ok(())
}

/// One gradient-coding round: server `i` returns `sum_j G[i][j] g_j`.
pub struct GradientJob<'a> {
    pub scheme: &'a GCScheme,
    pub partials: &'a [Matrix],
}

impl<'a> GradientJob<'a> {
    pub fn new(scheme: &'a GCScheme, partials: &'a [Matrix]) -> Result<Self> {
        if partials.len() != scheme.partitions() {
            return Err(Error::InvalidInput(format!(
                "{} partial gradients for {} partitions",
                partials.len(),
                scheme.partitions()
            )));
        }
        Ok(Self { scheme, partials })
    }
}

impl RoundJob for GradientJob<'_> {
    fn servers(&self) -> usize {
        self.scheme.servers()
    }

    fn threshold(&self) -> usize {
        self.scheme.threshold()
    }

    fn task_cost(&self, server: usize) -> f64 {
        self.scheme.assignments()[server].len() as f64
    }

    fn compute(&self, server: usize) -> Matrix {
        let g = self.scheme.encoding();
        let (r, c) = self.partials[0].shape();
        let mut acc = Matrix::zeros(r, c);
        for &j in &self.scheme.assignments()[server] {
            acc.axpy(g.get(server, j), &self.partials[j]);
        }
        acc
    }

    fn decode(&self, responses: &[(usize, Matrix)]) -> Result<Matrix> {
        let ids: Vec<usize> = responses.iter().map(|r| r.0).collect();
        let dv = self.scheme.decoding_vector(&ids)?;
        let (r, c) = self.partials[0].shape();
        let mut acc = Matrix::zeros(r, c);
        for (i, w) in responses {
            acc.axpy(dv.a[*i], w);
        }
        Ok(acc.real_if_close(1e-8))
    }

    fn target(&self) -> Matrix {
        let (r, c) = self.partials[0].shape();
        let mut acc = Matrix::zeros(r, c);
        for (p, &w) in self.partials.iter().zip(self.scheme.target()) {
            acc.axpy(w.into(), p);
        }
        acc
    }

    fn worst_stragglers(&self, s: usize) -> Result<Vec<usize>> {
        check_budget(self.servers(), s)?;
        Ok(crate::gradcode::gc_max_error(self.scheme, s)?.stragglers)
    }
}

impl RoundJob for CMMScheme {
    fn servers(&self) -> usize {
        CMMScheme::servers(self)
    }

    fn threshold(&self) -> usize {
        CMMScheme::threshold(self)
    }

    fn task_cost(&self, server: usize) -> f64 {
        self.tasks()[server].flops()
    }

    fn compute(&self, server: usize) -> Matrix {
        CMMScheme::compute(self, server).w
    }

    fn can_decode(&self, arrived: &[usize]) -> bool {
        CMMScheme::can_decode(self, arrived)
    }

    fn decode(&self, responses: &[(usize, Matrix)]) -> Result<Matrix> {
        let outputs: Vec<ServerOutput> = responses
            .iter()
            .map(|(i, w)| ServerOutput {
                server_id: *i,
                w: w.clone(),
                point: self.points().map(|p| p.get(*i)),
            })
            .collect();
        CMMScheme::decode(self, &outputs)
    }

    fn target(&self) -> Matrix {
        self.product().clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub server: usize,
    pub time: f64,
    /// Present for responses consumed by the decoder; later ones are
    /// discarded.
    pub output: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    /// Every response that arrives, ordered by `(time, server)`.
    pub arrivals: Vec<Arrival>,
    /// Number of leading arrivals the decoder consumed.
    pub consumed: usize,
    /// Servers whose responses did not reach the decoder.
    pub straggler_set: Vec<usize>,
    pub decode_time: Option<f64>,
    pub threshold: usize,
    pub output: Option<Matrix>,
    /// Relative Frobenius error against the job's target.
    pub error: Option<f64>,
    pub unrecoverable: bool,
}

#[derive(PartialEq)]
struct Event {
    time: f64,
    server: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (time, server).
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.server.cmp(&self.server))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Completion time of every server's task under one delay draw.
pub fn completion_times(job: &dyn RoundJob, model: &ServerModel, seed: u64) -> Result<Vec<f64>> {
    let n = job.servers();
    if model.servers() != n {
        return Err(Error::InvalidParameter(format!(
            "server model has {} servers, job has {n}",
            model.servers()
        )));
    }
    let costs: Vec<f64> = (0..n).map(|i| job.task_cost(i)).collect();
    let mean = costs.iter().sum::<f64>() / n as f64;
    let delays = model.sample_delays(seed);
    Ok((0..n)
        .map(|i| {
            let cost = if mean > 0.0 { costs[i] / mean } else { 1.0 };
            model.heterogeneity()[i] * cost * delays[i]
        })
        .collect())
}

/// Simulate one encode / compute / decode round.
pub fn run_round(job: &dyn RoundJob, model: &ServerModel, policy: &StragglerPolicy, seed: u64) -> Result<RoundTrace> {
    let n = job.servers();
    let times = completion_times(job, model, seed)?;
    let silent: Vec<usize> = match policy {
        StragglerPolicy::DelayOrder => Vec::new(),
        StragglerPolicy::FixedSet(set) => {
            if set.iter().any(|&i| i >= n) {
                return Err(Error::InvalidParameter("straggler index out of range".into()));
            }
            set.iter().copied().sorted().dedup().collect()
        }
        StragglerPolicy::AdversarialExhaustive(s) => job.worst_stragglers(*s)?,
    };

    let mut queue: BinaryHeap<Event> = (0..n)
        .filter(|i| !silent.contains(i))
        .map(|server| Event {
            time: times[server],
            server,
        })
        .collect();
    let mut arrivals = Vec::with_capacity(queue.len());
    let mut arrived_ids = Vec::new();
    let mut decode_time = None;
    while let Some(Event { time, server }) = queue.pop() {
        if decode_time.is_none() {
            arrived_ids.push(server);
            arrivals.push(Arrival {
                server,
                time,
                output: Some(job.compute(server)),
            });
            if job.can_decode(&arrived_ids) {
                decode_time = Some(time);
            }
        } else {
            arrivals.push(Arrival {
                server,
                time,
                output: None,
            });
        }
    }

    let consumed = arrived_ids.len();
    let straggler_set: Vec<usize> = (0..n).filter(|i| !arrived_ids.contains(i)).collect();
    let (output, error) = if decode_time.is_some() {
        let responses: Vec<(usize, Matrix)> = arrivals[..consumed]
            .iter()
            .map(|a| (a.server, a.output.clone().expect("consumed arrivals carry output")))
            .collect();
        let out = job.decode(&responses)?;
        let err = out.relative_error(&job.target());
        (Some(out), Some(err))
    } else {
        (None, None)
    };
    Ok(RoundTrace {
        arrivals,
        consumed,
        straggler_set,
        decode_time,
        threshold: job.threshold(),
        unrecoverable: output.is_none(),
        output,
        error,
    })
}
