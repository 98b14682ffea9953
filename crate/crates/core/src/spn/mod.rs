//! Generalized stochastic Petri nets.
//!
//! Nets carry exponential timed transitions (single- or infinite-server),
//! immediate transitions with weights and priorities, and input, output and
//! inhibitor arcs. [`reachability`] builds the tangible CTMC, folding
//! vanishing markings away on the fly; [`steady_state`] solves it and
//! [`eval_metric`] evaluates marking expressions against the solution.

mod lu;
mod metric;
mod reach;
mod solve;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rbd::AvailabilityResult;

pub use metric::{CmpOp, CompiledMetric, Expr, MetricExpr};
pub use reach::{reachability, Ctmc};
pub use solve::{steady_state, RESIDUAL_TOLERANCE};

/// Default bound on the tangible state space.
pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServerSemantics {
    Single,
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TransitionKind {
    /// Exponentially distributed delay with the given rate per hour.
    Timed {
        rate: f64,
        semantics: ServerSemantics,
    },
    /// Fires in zero time; weights resolve conflicts among the enabled
    /// immediates of the highest priority.
    Immediate { weight: f64, priority: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    pub kind: TransitionKind,
}

impl Transition {
    pub fn is_immediate(&self) -> bool {
        matches!(self.kind, TransitionKind::Immediate { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    /// place -> transition
    Input,
    /// transition -> place
    Output,
    /// place -o transition
    Inhibitor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub kind: ArcKind,
    pub place: String,
    pub transition: String,
    pub multiplicity: u32,
}

/// Token count per place, in place order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marking(pub Vec<u32>);

impl Marking {
    pub fn tokens(&self, place: usize) -> u32 {
        self.0[place]
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Wiring {
    inputs: Vec<(usize, u32)>,
    outputs: Vec<(usize, u32)>,
    inhibitors: Vec<(usize, u32)>,
}

/// A validated net with an initial marking.
#[derive(Debug, Clone, PartialEq)]
pub struct SpnModel {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<Arc>,
    initial: Marking,
    wiring: Vec<Wiring>,
    place_index: HashMap<String, usize>,
}

impl SpnModel {
    pub fn new(
        places: Vec<String>,
        transitions: Vec<Transition>,
        arcs: Vec<Arc>,
        initial: Marking,
    ) -> Result<Self> {
        if places.is_empty() {
            return Err(Error::structural("net", "no places"));
        }
        if transitions.is_empty() {
            return Err(Error::structural("net", "no transitions"));
        }
        let mut place_index = HashMap::new();
        for (i, p) in places.iter().enumerate() {
            if place_index.insert(p.clone(), i).is_some() {
                return Err(Error::structural(format!("place {p}"), "duplicate place name"));
            }
        }
        let mut transition_index = HashMap::new();
        for (i, t) in transitions.iter().enumerate() {
            if transition_index.insert(t.name.clone(), i).is_some() {
                return Err(Error::structural(
                    format!("transition {}", t.name),
                    "duplicate transition name",
                ));
            }
            match t.kind {
                TransitionKind::Timed { rate, .. } => {
                    if !(rate.is_finite() && rate > 0.0) {
                        return Err(Error::structural(
                            format!("transition {}", t.name),
                            format!("rate must be finite and positive, got {rate}"),
                        ));
                    }
                }
                TransitionKind::Immediate { weight, .. } => {
                    if !(weight.is_finite() && weight > 0.0) {
                        return Err(Error::structural(
                            format!("transition {}", t.name),
                            format!("weight must be finite and positive, got {weight}"),
                        ));
                    }
                }
            }
        }
        if initial.0.len() != places.len() {
            return Err(Error::structural(
                "initial marking",
                format!("has {} entries for {} places", initial.0.len(), places.len()),
            ));
        }
        let mut wiring = vec![Wiring::default(); transitions.len()];
        for arc in &arcs {
            let what = format!("arc {} {:?} {}", arc.place, arc.kind, arc.transition);
            let p = *place_index
                .get(&arc.place)
                .ok_or_else(|| Error::structural(&what, format!("unknown place {}", arc.place)))?;
            let t = *transition_index.get(&arc.transition).ok_or_else(|| {
                Error::structural(&what, format!("unknown transition {}", arc.transition))
            })?;
            if arc.multiplicity == 0 {
                return Err(Error::structural(&what, "multiplicity must be at least 1"));
            }
            let w = &mut wiring[t];
            let list = match arc.kind {
                ArcKind::Input => &mut w.inputs,
                ArcKind::Output => &mut w.outputs,
                ArcKind::Inhibitor => &mut w.inhibitors,
            };
            match list.iter_mut().find(|(q, _)| *q == p) {
                Some((_, m)) => *m += arc.multiplicity,
                None => list.push((p, arc.multiplicity)),
            }
        }
        Ok(SpnModel {
            places,
            transitions,
            arcs,
            initial,
            wiring,
            place_index,
        })
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.place_index.get(name).copied()
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    /// Returns a copy of the net with a different initial marking.
    pub fn with_initial(&self, initial: Marking) -> Result<Self> {
        SpnModel::new(
            self.places.clone(),
            self.transitions.clone(),
            self.arcs.clone(),
            initial,
        )
    }

    fn check_marking(&self, marking: &Marking) -> Result<()> {
        if marking.0.len() != self.places.len() {
            return Err(Error::structural(
                "marking",
                format!(
                    "has {} entries for {} places",
                    marking.0.len(),
                    self.places.len()
                ),
            ));
        }
        Ok(())
    }

    /// Input coverage and inhibitor conditions, ignoring immediate preemption.
    pub(crate) fn has_concession(&self, t: usize, m: &Marking) -> bool {
        let w = &self.wiring[t];
        w.inputs.iter().all(|&(p, k)| m.0[p] >= k) && w.inhibitors.iter().all(|&(p, k)| m.0[p] < k)
    }

    /// Indices of the enabled transitions. Immediates preempt timed
    /// transitions and only the highest enabled priority level survives.
    pub fn enabled_indices(&self, m: &Marking) -> Vec<usize> {
        let concession: Vec<usize> = (0..self.transitions.len())
            .filter(|&t| self.has_concession(t, m))
            .collect();
        let top = concession
            .iter()
            .filter_map(|&t| match self.transitions[t].kind {
                TransitionKind::Immediate { priority, .. } => Some(priority),
                TransitionKind::Timed { .. } => None,
            })
            .max();
        match top {
            None => concession,
            Some(top) => concession
                .into_iter()
                .filter(|&t| {
                    matches!(self.transitions[t].kind,
                        TransitionKind::Immediate { priority, .. } if priority == top)
                })
                .collect(),
        }
    }

    /// A marking is vanishing when some immediate transition is enabled.
    pub fn is_vanishing(&self, m: &Marking) -> bool {
        (0..self.transitions.len())
            .any(|t| self.transitions[t].is_immediate() && self.has_concession(t, m))
    }

    pub(crate) fn fire_unchecked(&self, t: usize, m: &Marking) -> Marking {
        let w = &self.wiring[t];
        let mut next = m.clone();
        for &(p, k) in &w.inputs {
            next.0[p] -= k;
        }
        for &(p, k) in &w.outputs {
            next.0[p] += k;
        }
        next
    }

    /// How many times the transition could fire concurrently in `m`.
    pub fn enabling_degree(&self, t: usize, m: &Marking) -> u32 {
        self.wiring[t]
            .inputs
            .iter()
            .map(|&(p, k)| m.0[p] / k)
            .min()
            .unwrap_or(1)
    }

    /// Effective exponential rate of a timed transition in `m`.
    pub(crate) fn effective_rate(&self, t: usize, m: &Marking) -> f64 {
        match self.transitions[t].kind {
            TransitionKind::Timed {
                rate,
                semantics: ServerSemantics::Single,
            } => rate,
            TransitionKind::Timed {
                rate,
                semantics: ServerSemantics::Infinite,
            } => rate * self.enabling_degree(t, m) as f64,
            TransitionKind::Immediate { .. } => 0.0,
        }
    }

    pub(crate) fn immediate_weight(&self, t: usize) -> f64 {
        match self.transitions[t].kind {
            TransitionKind::Immediate { weight, .. } => weight,
            TransitionKind::Timed { .. } => 0.0,
        }
    }
}

/// Names of the transitions enabled in `marking`.
pub fn enabled(model: &SpnModel, marking: &Marking) -> Result<Vec<String>> {
    model.check_marking(marking)?;
    Ok(model
        .enabled_indices(marking)
        .into_iter()
        .map(|t| model.transitions[t].name.clone())
        .collect())
}

/// Fires `transition` in `marking` and returns the successor marking.
pub fn fire(model: &SpnModel, marking: &Marking, transition: &str) -> Result<Marking> {
    model.check_marking(marking)?;
    let t = model
        .transition_index(transition)
        .ok_or_else(|| Error::structural("net", format!("unknown transition {transition}")))?;
    if !model.enabled_indices(marking).contains(&t) {
        return Err(Error::NotEnabled(transition.to_string()));
    }
    Ok(model.fire_unchecked(t, marking))
}

/// Evaluates a metric against a solved chain.
pub fn eval_metric(model: &SpnModel, ctmc: &Ctmc, pi: &[f64], expr: &MetricExpr) -> Result<f64> {
    let compiled = expr.compile(model)?;
    if pi.len() != ctmc.len() {
        return Err(Error::Domain(format!(
            "probability vector has {} entries for {} states",
            pi.len(),
            ctmc.len()
        )));
    }
    Ok(ctmc
        .states()
        .iter()
        .zip(pi)
        .map(|(m, p)| p * compiled.value(m))
        .sum())
}

/// Steady-state rate of transitions from states satisfying `up` into states
/// that do not.
pub fn failure_frequency(ctmc: &Ctmc, pi: &[f64], up: impl Fn(&Marking) -> bool) -> f64 {
    let flags: Vec<bool> = ctmc.states().iter().map(&up).collect();
    let mut freq = 0.0;
    for (i, &is_up) in flags.iter().enumerate() {
        if !is_up {
            continue;
        }
        for &(j, rate) in ctmc.row(i) {
            if !flags[j] {
                freq += pi[i] * rate;
            }
        }
    }
    freq
}

/// Availability, downtime and equivalent MTTF/MTTR of a solved net under
/// an "up" predicate.
pub fn availability_result(
    model: &SpnModel,
    ctmc: &Ctmc,
    pi: &[f64],
    up: &MetricExpr,
) -> Result<AvailabilityResult> {
    let compiled = up.compile(model)?;
    let mut a = 0.0;
    let mut u = 0.0;
    for (m, p) in ctmc.states().iter().zip(pi) {
        if compiled.value(m) != 0.0 {
            a += p;
        } else {
            u += p;
        }
    }
    let f = failure_frequency(ctmc, pi, |m| compiled.value(m) != 0.0);
    Ok(AvailabilityResult::from_frequency(a, u, f))
}

/// Incremental construction of nets by name.
#[derive(Debug, Default, Clone)]
pub struct SpnBuilder {
    places: Vec<String>,
    tokens: Vec<u32>,
    transitions: Vec<Transition>,
    arcs: Vec<Arc>,
}

impl SpnBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(mut self, name: &str, tokens: u32) -> Self {
        self.places.push(name.to_string());
        self.tokens.push(tokens);
        self
    }

    pub fn timed(mut self, name: &str, rate: f64, semantics: ServerSemantics) -> Self {
        self.transitions.push(Transition {
            name: name.to_string(),
            kind: TransitionKind::Timed { rate, semantics },
        });
        self
    }

    pub fn immediate(mut self, name: &str, weight: f64, priority: u32) -> Self {
        self.transitions.push(Transition {
            name: name.to_string(),
            kind: TransitionKind::Immediate { weight, priority },
        });
        self
    }

    fn arc(mut self, kind: ArcKind, place: &str, transition: &str, multiplicity: u32) -> Self {
        self.arcs.push(Arc {
            kind,
            place: place.to_string(),
            transition: transition.to_string(),
            multiplicity,
        });
        self
    }

    pub fn input(self, place: &str, transition: &str, multiplicity: u32) -> Self {
        self.arc(ArcKind::Input, place, transition, multiplicity)
    }

    pub fn output(self, transition: &str, place: &str, multiplicity: u32) -> Self {
        self.arc(ArcKind::Output, place, transition, multiplicity)
    }

    pub fn inhibitor(self, place: &str, transition: &str, multiplicity: u32) -> Self {
        self.arc(ArcKind::Inhibitor, place, transition, multiplicity)
    }

    pub fn build(self) -> Result<SpnModel> {
        SpnModel::new(
            self.places,
            self.transitions,
            self.arcs,
            Marking(self.tokens),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn guarded() -> SpnModel {
        SpnBuilder::new()
            .place("A", 1)
            .place("B", 0)
            .place("P", 1)
            .timed("T", 1.0, ServerSemantics::Single)
            .input("A", "T", 1)
            .output("T", "B", 1)
            .inhibitor("P", "T", 1)
            .build()
            .unwrap()
    }

    #[test]
    fn inhibitor_blocks_when_marked() {
        let net = guarded();
        assert!(enabled(&net, &Marking(vec![1, 0, 1])).unwrap().is_empty());
        assert_eq!(enabled(&net, &Marking(vec![1, 0, 0])).unwrap(), vec!["T"]);
        assert!(enabled(&net, &Marking(vec![0, 0, 0])).unwrap().is_empty());
    }

    #[test]
    fn firing_moves_tokens_and_leaves_inhibitor_places() {
        let net = guarded();
        let next = fire(&net, &Marking(vec![1, 0, 0]), "T").unwrap();
        assert_eq!(next, Marking(vec![0, 1, 0]));
        assert!(matches!(
            fire(&net, &Marking(vec![1, 0, 1]), "T"),
            Err(Error::NotEnabled(_))
        ));
    }

    #[test]
    fn input_multiplicity() {
        let net = SpnBuilder::new()
            .place("A", 3)
            .place("B", 0)
            .timed("T", 1.0, ServerSemantics::Infinite)
            .input("A", "T", 2)
            .output("T", "B", 1)
            .build()
            .unwrap();
        let m = Marking(vec![3, 0]);
        assert_eq!(net.enabling_degree(0, &m), 1);
        assert_eq!(fire(&net, &m, "T").unwrap(), Marking(vec![1, 1]));
        assert!(fire(&net, &Marking(vec![1, 1]), "T").is_err());
    }

    #[test]
    fn immediates_preempt_by_priority() {
        let net = SpnBuilder::new()
            .place("A", 1)
            .place("B", 0)
            .timed("slow", 1.0, ServerSemantics::Single)
            .immediate("low", 1.0, 1)
            .immediate("high", 1.0, 2)
            .input("A", "slow", 1)
            .input("A", "low", 1)
            .input("A", "high", 1)
            .output("slow", "B", 1)
            .output("low", "B", 1)
            .output("high", "B", 1)
            .build()
            .unwrap();
        assert_eq!(enabled(&net, &Marking(vec![1, 0])).unwrap(), vec!["high"]);
        assert!(net.is_vanishing(&Marking(vec![1, 0])));
    }

    #[test]
    fn structural_errors() {
        let dup = SpnBuilder::new()
            .place("A", 0)
            .place("A", 0)
            .timed("T", 1.0, ServerSemantics::Single)
            .build();
        assert!(matches!(dup, Err(Error::Structural { .. })));
        let dangling = SpnBuilder::new()
            .place("A", 0)
            .timed("T", 1.0, ServerSemantics::Single)
            .input("Z", "T", 1)
            .build();
        assert!(matches!(dangling, Err(Error::Structural { .. })));
        let bad_rate = SpnBuilder::new()
            .place("A", 0)
            .timed("T", 0.0, ServerSemantics::Single)
            .build();
        assert!(bad_rate.is_err());
        let no_transitions = SpnBuilder::new().place("A", 0).build();
        assert!(no_transitions.is_err());
    }
}
