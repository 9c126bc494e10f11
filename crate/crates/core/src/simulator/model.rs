use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Per-unit-of-work delay law of a server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DelayLaw {
    /// Server `i` always takes `delays[i]`.
    Deterministic(Vec<f64>),
    /// `shift + Exp(rate)`.
    ShiftedExponential { shift: f64, rate: f64 },
    /// Uniform draw from the listed observations.
    Empirical(Vec<f64>),
}

impl Default for DelayLaw {
    fn default() -> Self {
        DelayLaw::ShiftedExponential { shift: 1.0, rate: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerModel {
    n: usize,
    delay: DelayLaw,
    heterogeneity: Vec<f64>,
}

impl ServerModel {
    pub fn new(n: usize, delay: DelayLaw, heterogeneity: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("server model needs n >= 1".into()));
        }
        if heterogeneity.len() != n || heterogeneity.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "need {n} positive heterogeneity factors"
            )));
        }
        match &delay {
            DelayLaw::Deterministic(d) if d.len() != n || d.iter().any(|&x| !(x >= 0.0 && x.is_finite())) => {
                return Err(Error::InvalidParameter(format!("need {n} nonnegative deterministic delays")));
            }
            DelayLaw::ShiftedExponential { shift, rate } if !(*shift >= 0.0 && *rate > 0.0 && rate.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "shifted exponential needs shift >= 0 and rate > 0, got ({shift}, {rate})"
                )));
            }
            DelayLaw::Empirical(obs) if obs.is_empty() || obs.iter().any(|&x| !(x >= 0.0 && x.is_finite())) => {
                return Err(Error::InvalidParameter("empirical delays must be nonempty and nonnegative".into()));
            }
            _ => {}
        }
        Ok(Self { n, delay, heterogeneity })
    }

    /// `n` identical servers with the default shifted-exponential law.
    pub fn homogeneous(n: usize) -> Result<Self> {
        Self::new(n, DelayLaw::default(), vec![1.0; n])
    }

    pub fn with_delay(n: usize, delay: DelayLaw) -> Result<Self> {
        Self::new(n, delay, vec![1.0; n])
    }

    pub fn servers(&self) -> usize {
        self.n
    }

    pub fn delay(&self) -> &DelayLaw {
        &self.delay
    }

    pub fn heterogeneity(&self) -> &[f64] {
        &self.heterogeneity
    }

    /// One delay multiplier per server, reproducible from `seed`.
    pub fn sample_delays(&self, seed: u64) -> Vec<f64> {
        let mut rng = substream(seed, "server-delays", 0);
        match &self.delay {
            DelayLaw::Deterministic(d) => d.clone(),
            DelayLaw::ShiftedExponential { shift, rate } => {
                let exp = Exp::new(*rate).expect("validated rate");
                (0..self.n).map(|_| shift + exp.sample(&mut rng)).collect()
            }
            DelayLaw::Empirical(obs) => (0..self.n).map(|_| obs[rng.random_range(0..obs.len())]).collect(),
        }
    }
}

/// Which servers fail to respond in a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StragglerPolicy {
    /// Everyone responds; responses beyond what decoding needs arrive too
    /// late to matter.
    DelayOrder,
    /// The listed servers never respond.
    FixedSet(Vec<usize>),
    /// The `s` servers whose absence hurts decoding most never respond.
    AdversarialExhaustive(usize),
}
