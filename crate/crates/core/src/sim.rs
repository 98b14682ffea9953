//! Discrete-event Monte Carlo simulation of stochastic Petri nets.
//!
//! Each replication races the enabled timed transitions with exponential
//! delays, resampled after every marking change, and fires immediate
//! transitions in zero time by priority and weight. The metric is
//! time-averaged over `(warmup, horizon]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::spn::{CompiledMetric, Marking, MetricExpr, SpnModel};

/// Zero-time firings allowed between two timed events.
const MAX_IMMEDIATE_CHAIN: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Simulated hours per replication.
    pub horizon: f64,
    pub replications: u32,
    /// Hours discarded at the start of each replication.
    pub warmup: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Warmup defaults to 1% of the horizon.
    pub fn new(horizon: f64, replications: u32, seed: u64) -> Self {
        SimConfig {
            horizon,
            replications,
            warmup: horizon * 0.01,
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.warmup >= 0.0 && self.horizon > self.warmup) {
            return Err(Error::Domain(format!(
                "need horizon > warmup >= 0, got horizon = {}, warmup = {}",
                self.horizon, self.warmup
            )));
        }
        if self.replications < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 replications, got {}",
                self.replications
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    /// Half-width of the 95% Student-t interval.
    pub ci_halfwidth: f64,
    pub replications: Vec<f64>,
}

impl SimEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.ci_halfwidth
    }

    fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .expect("at least two replications")
            .inverse_cdf(0.975);
        SimEstimate {
            mean,
            ci_halfwidth: t * (var / n).sqrt(),
            replications: values,
        }
    }
}

struct Replication<'a> {
    model: &'a SpnModel,
    metric: &'a CompiledMetric,
    rng: ChaCha20Rng,
}

impl Replication<'_> {
    /// Fires immediates until the marking is tangible.
    fn settle(&mut self, mut m: Marking) -> Result<Marking> {
        let mut chain: Vec<Marking> = Vec::new();
        while self.model.is_vanishing(&m) {
            if let Some(pos) = chain.iter().position(|s| *s == m) {
                let mut cycle: Vec<String> = chain[pos..].iter().map(Marking::to_string).collect();
                cycle.push(m.to_string());
                return Err(Error::Livelock {
                    witness: cycle.join(" -> "),
                });
            }
            if chain.len() >= MAX_IMMEDIATE_CHAIN {
                return Err(Error::Livelock {
                    witness: format!("more than {MAX_IMMEDIATE_CHAIN} immediate firings from {m}"),
                });
            }
            let choices = self.model.enabled_indices(&m);
            let weights: Vec<f64> = choices.iter().map(|&t| self.model.immediate_weight(t)).collect();
            let t = choices[self.pick(&weights)];
            let next = self.model.fire_unchecked(t, &m);
            chain.push(m);
            m = next;
        }
        Ok(m)
    }

    fn pick(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        weights.len() - 1
    }

    fn run(mut self, config: &SimConfig) -> Result<f64> {
        let mut m = self.settle(self.model.initial_marking().clone())?;
        let mut now = 0.0;
        let mut area = 0.0;
        while now < config.horizon {
            let timed = self.model.enabled_indices(&m);
            let rates: Vec<f64> = timed.iter().map(|&t| self.model.effective_rate(t, &m)).collect();
            let total: f64 = rates.iter().sum();
            let next = if total > 0.0 {
                now + self.rng.sample::<f64, _>(Exp1) / total
            } else {
                f64::INFINITY
            };
            let end = next.min(config.horizon);
            let observed = (end - now.max(config.warmup)).max(0.0);
            area += observed * self.metric.value(&m);
            now = end;
            if now >= config.horizon {
                break;
            }
            let t = timed[self.pick(&rates)];
            m = self.settle(self.model.fire_unchecked(t, &m))?;
        }
        Ok(area / (config.horizon - config.warmup))
    }
}

/// Estimates the steady-state value of `metric`. Replication `r` draws
/// from a ChaCha stream seeded with `seed + r`, so the result does not
/// depend on the thread count.
pub fn simulate(model: &SpnModel, metric: &MetricExpr, config: &SimConfig) -> Result<SimEstimate> {
    config.check()?;
    let compiled = metric.compile(model)?;
    let values = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            Replication {
                model,
                metric: &compiled,
                rng: ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(u64::from(r))),
            }
            .run(config)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SimEstimate::from_values(values))
}
