//! Capacity-oriented availability.
//!
//! COA is the expected operational capacity over the maximum capacity. It
//! is computed two ways: from state rewards on a solved CTMC, and from a
//! closed form that combines a binomial server layer with the stationary
//! distribution of a container pool sharing one repair facility.
//!
//! The closed form reads
//!
//! ```text
//! COA = 1/N * sum_{j=1..S} P(exactly j servers up) * sum_{k=0..jp} CTs[k, jp] * (jp - k)
//! ```
//!
//! with `S` servers, `p` containers per server, `N = S * p`, and
//! `CTs[k, n]` the probability that `k` of `n` containers are failed.

use serde::{Deserialize, Serialize};

use crate::arch::FailRepair;
use crate::error::{Error, Result};
use crate::rbd::binomial;
use crate::spn::{
    reachability, steady_state, CmpOp, Ctmc, Expr, MetricExpr, ServerSemantics, SpnBuilder,
    SpnModel, DEFAULT_MAX_STATES,
};

pub const SRV_ON: &str = "SRV_ON";
pub const SRV_OFF: &str = "SRV_OFF";
pub const CT_UP: &str = "CT_UP";
pub const CT_DOWN: &str = "CT_DOWN";

/// Operational capacity per tangible state and the maximum capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReward {
    pub capacities: Vec<u64>,
    pub mpc: u64,
}

impl CapacityReward {
    pub fn new(capacities: Vec<u64>, mpc: u64) -> Result<Self> {
        if mpc == 0 {
            return Err(Error::Domain("maximum processing capacity must be positive".into()));
        }
        if let Some((i, c)) = capacities.iter().enumerate().find(|(_, &c)| c > mpc) {
            return Err(Error::Domain(format!(
                "state {i} has capacity {c} above the maximum {mpc}"
            )));
        }
        Ok(CapacityReward { capacities, mpc })
    }

    /// Capacities from an expression evaluated on every tangible marking.
    pub fn from_expr(model: &SpnModel, ctmc: &Ctmc, expr: &Expr, mpc: u64) -> Result<Self> {
        let metric = MetricExpr::Expectation(expr.clone()).compile(model)?;
        let capacities = ctmc
            .states()
            .iter()
            .map(|m| {
                let v = metric.value(m);
                if v < 0.0 || v.fract() != 0.0 {
                    Err(Error::Domain(format!(
                        "capacity {v} in marking {m} is not a non-negative integer"
                    )))
                } else {
                    Ok(v as u64)
                }
            })
            .collect::<Result<_>>()?;
        CapacityReward::new(capacities, mpc)
    }
}

/// `sum(pc_i * pi_i) / MPC`.
pub fn coa_from_states(pi: &[f64], reward: &CapacityReward) -> Result<f64> {
    if reward.capacities.len() != pi.len() {
        return Err(Error::structural(
            "capacity reward",
            format!(
                "covers {} states but the distribution has {}",
                reward.capacities.len(),
                pi.len()
            ),
        ));
    }
    if reward.mpc == 0 {
        return Err(Error::Domain("maximum processing capacity must be positive".into()));
    }
    let expected: f64 = pi
        .iter()
        .zip(&reward.capacities)
        .map(|(p, &c)| p * c as f64)
        .sum();
    Ok(expected / reward.mpc as f64)
}

fn check_rates(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) || !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain(format!(
            "container rates must be finite and positive, got lambda = {lambda}, mu = {mu}"
        )));
    }
    Ok(())
}

/// Stationary distribution over the number of failed containers in a pool
/// of `n`, each failing at rate `lambda`, repaired one at a time at rate `mu`.
pub fn cts_distribution(n: usize, lambda: f64, mu: f64) -> Result<Vec<f64>> {
    check_rates(lambda, mu)?;
    // log of n!/(n-k)! * lambda^k * mu^(n-k), up to the common factor mu^n
    let mut logs = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    logs.push(acc);
    let ratio = lambda.ln() - mu.ln();
    for k in 1..=n {
        acc += ((n - k + 1) as f64).ln() + ratio;
        logs.push(acc);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// `CTs[k, n]`: probability that exactly `k` of `n` pooled containers are failed.
pub fn cts_probability(k: usize, n: usize, lambda: f64, mu: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    Ok(cts_distribution(n, lambda, mu)?[k])
}

/// Expected operational containers in a pool of `n`.
fn expected_up(n: usize, lambda: f64, mu: f64) -> Result<f64> {
    Ok(cts_distribution(n, lambda, mu)?
        .iter()
        .enumerate()
        .map(|(k, p)| p * (n - k) as f64)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoaParams {
    pub n_servers: u32,
    pub containers_per_server: u32,
    /// Steady-state availability of one server.
    pub server_availability: f64,
    /// Per-container failure rate, per hour.
    pub container_failure_rate: f64,
    /// Repair rate of the shared container repair facility, per hour.
    pub container_repair_rate: f64,
}

/// Closed-form COA; see the module docs for the formula.
pub fn coa_closed_form(params: &CoaParams) -> Result<f64> {
    let s = params.n_servers as usize;
    let p = params.containers_per_server as usize;
    if s == 0 || p == 0 {
        return Err(Error::Domain(
            "need at least one server and one container per server".into(),
        ));
    }
    let a = params.server_availability;
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!("server availability {a} outside (0, 1]")));
    }
    let (lambda, mu) = (params.container_failure_rate, params.container_repair_rate);
    check_rates(lambda, mu)?;
    let total = (s * p) as f64;

    let mut coa = 0.0;
    for j in 1..=s {
        let weight = binomial(s, j) * a.powi(j as i32) * (1.0 - a).powi((s - j) as i32);
        coa += weight * expected_up(j * p, lambda, mu)?;
    }
    let coa = coa / total;
    if !(0.0..=1.0 + 1e-12).contains(&coa) {
        return Err(Error::Domain(format!("closed-form COA {coa} outside [0, 1]")));
    }
    Ok(coa.min(1.0))
}

/// Server and container timing for the capacity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoaRates {
    pub server: FailRepair,
    pub container: FailRepair,
}

impl CoaRates {
    pub fn server_availability(&self) -> f64 {
        self.server.mttf / (self.server.mttf + self.server.mttr)
    }

    pub fn params(&self, n_servers: u32, containers_per_server: u32) -> CoaParams {
        CoaParams {
            n_servers,
            containers_per_server,
            server_availability: self.server_availability(),
            container_failure_rate: 1.0 / self.container.mttf,
            container_repair_rate: 1.0 / self.container.mttr,
        }
    }

    fn check(&self) -> Result<()> {
        for (who, fr) in [("server", self.server), ("container", self.container)] {
            if !(fr.mttf.is_finite() && fr.mttf > 0.0 && fr.mttr.is_finite() && fr.mttr > 0.0) {
                return Err(Error::Domain(format!(
                    "{who} MTTF and MTTR must be finite and positive"
                )));
            }
        }
        Ok(())
    }
}

/// Capacity net: `n_servers` independent servers with their own repair, and
/// a pool of `n_servers * p` containers failing independently and sharing a
/// single repair facility.
pub fn build_capacity_spn(n_servers: u32, p: u32, rates: &CoaRates) -> Result<SpnModel> {
    if n_servers == 0 || p == 0 {
        return Err(Error::Domain(
            "need at least one server and one container per server".into(),
        ));
    }
    rates.check()?;
    SpnBuilder::new()
        .place(SRV_ON, n_servers)
        .place(SRV_OFF, 0)
        .place(CT_UP, n_servers * p)
        .place(CT_DOWN, 0)
        .timed("srv_fail", 1.0 / rates.server.mttf, ServerSemantics::Infinite)
        .timed("srv_repair", 1.0 / rates.server.mttr, ServerSemantics::Infinite)
        .timed("ct_fail", 1.0 / rates.container.mttf, ServerSemantics::Infinite)
        .timed("ct_repair", 1.0 / rates.container.mttr, ServerSemantics::Single)
        .input(SRV_ON, "srv_fail", 1)
        .output("srv_fail", SRV_OFF, 1)
        .input(SRV_OFF, "srv_repair", 1)
        .output("srv_repair", SRV_ON, 1)
        .input(CT_UP, "ct_fail", 1)
        .output("ct_fail", CT_DOWN, 1)
        .input(CT_DOWN, "ct_repair", 1)
        .output("ct_repair", CT_UP, 1)
        .build()
}

/// Delivered capacity: operational containers, capped by the slots on
/// operational servers.
pub fn capacity_expr(p: u32) -> Expr {
    Expr::Min(
        Box::new(Expr::tokens(CT_UP)),
        Box::new(Expr::Mul(
            Box::new(Expr::Const(i64::from(p))),
            Box::new(Expr::tokens(SRV_ON)),
        )),
    )
}

/// State-reward COA of the capacity net.
pub fn coa_state_reward(n_servers: u32, p: u32, rates: &CoaRates) -> Result<f64> {
    let net = build_capacity_spn(n_servers, p, rates)?;
    let ctmc = reachability(&net, DEFAULT_MAX_STATES)?;
    let pi = steady_state(&ctmc)?;
    let reward =
        CapacityReward::from_expr(&net, &ctmc, &capacity_expr(p), u64::from(n_servers * p))?;
    coa_from_states(&pi, &reward)
}

/// One scenario of the capacity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoaRow {
    pub servers: u32,
    pub capacity: u32,
    pub state_reward: f64,
    pub closed_form: f64,
}

/// COA for 1..=max_servers servers, each hosting `containers_per_server`.
pub fn coa_capacity_sweep(
    max_servers: u32,
    containers_per_server: u32,
    rates: &CoaRates,
) -> Result<Vec<CoaRow>> {
    if max_servers == 0 {
        return Err(Error::Domain("capacity sweep needs at least one server".into()));
    }
    use rayon::prelude::*;
    (1..=max_servers)
        .into_par_iter()
        .map(|n| {
            Ok(CoaRow {
                servers: n,
                capacity: n * containers_per_server,
                state_reward: coa_state_reward(n, containers_per_server, rates)?,
                closed_form: coa_closed_form(&rates.params(n, containers_per_server))?,
            })
        })
        .collect()
}

/// `P{#place >= 1}` for the capacity net's servers: convenience for
/// comparing COA with plain availability.
pub fn any_server_up() -> MetricExpr {
    MetricExpr::Probability(Expr::cmp(CmpOp::Ge, Expr::tokens(SRV_ON), Expr::Const(1)))
}
