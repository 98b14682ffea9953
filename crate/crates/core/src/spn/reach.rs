use std::collections::HashMap;
use std::rc::Rc;

use super::{Marking, SpnModel};
use crate::error::{Error, Result};

/// Tangible state space and infinitesimal generator.
///
/// Off-diagonal rates are stored row-wise, sorted by target state; the
/// diagonal holds minus the row sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctmc {
    states: Vec<Marking>,
    rows: Vec<Vec<(usize, f64)>>,
    diagonal: Vec<f64>,
    initial: Vec<(usize, f64)>,
}

impl Ctmc {
    /// Builds a chain from explicit `(from, to, rate)` entries. Self-loops
    /// are dropped and parallel entries summed.
    pub fn from_rates(states: Vec<Marking>, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::structural("ctmc", "no states"));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, rate) in entries {
            if i >= n || j >= n {
                return Err(Error::structural(
                    "ctmc",
                    format!("entry ({i}, {j}) outside {n} states"),
                ));
            }
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::structural(
                    "ctmc",
                    format!("rate ({i}, {j}) = {rate} is not a finite non-negative number"),
                ));
            }
            if i != j && rate > 0.0 {
                add_entry(&mut rows[i], j, rate);
            }
        }
        Ok(Ctmc::assemble(states, rows, vec![(0, 1.0)]))
    }

    fn assemble(
        states: Vec<Marking>,
        mut rows: Vec<Vec<(usize, f64)>>,
        initial: Vec<(usize, f64)>,
    ) -> Self {
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
        }
        let diagonal = rows.iter().map(|r| -r.iter().map(|e| e.1).sum::<f64>()).collect();
        Ctmc {
            states,
            rows,
            diagonal,
            initial,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Marking] {
        &self.states
    }

    /// Off-diagonal entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diagonal[i]
    }

    /// Generator entry `q[i][j]`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    /// Distribution over tangible states reached from the initial marking.
    pub fn initial_distribution(&self) -> &[(usize, f64)] {
        &self.initial
    }

    pub fn state_index(&self, marking: &Marking) -> Option<usize> {
        self.states.iter().position(|m| m == marking)
    }

    /// Number of stored off-diagonal entries.
    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Dense copy of the generator, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            q[i][i] = self.diagonal[i];
            for &(j, r) in &self.rows[i] {
                q[i][j] = r;
            }
        }
        q
    }
}

fn add_entry(row: &mut Vec<(usize, f64)>, j: usize, rate: f64) {
    match row.iter_mut().find(|(c, _)| *c == j) {
        Some((_, r)) => *r += rate,
        None => row.push((j, rate)),
    }
}

type Resolution = Rc<Vec<(Marking, f64)>>;

struct Explorer<'a> {
    model: &'a SpnModel,
    max_states: usize,
    index: HashMap<Marking, usize>,
    states: Vec<Marking>,
    vanishing: HashMap<Marking, Resolution>,
}

impl<'a> Explorer<'a> {
    fn intern(&mut self, m: Marking) -> Result<usize> {
        if let Some(&i) = self.index.get(&m) {
            return Ok(i);
        }
        if self.states.len() >= self.max_states {
            return Err(Error::StateOverflow {
                bound: self.max_states,
            });
        }
        let i = self.states.len();
        self.index.insert(m.clone(), i);
        self.states.push(m);
        Ok(i)
    }

    /// Distribution over the tangible markings eventually reached from `m`
    /// by immediate firings.
    fn resolve(&mut self, m: Marking, stack: &mut Vec<Marking>) -> Result<Resolution> {
        if !self.model.is_vanishing(&m) {
            return Ok(Rc::new(vec![(m, 1.0)]));
        }
        if let Some(r) = self.vanishing.get(&m) {
            return Ok(r.clone());
        }
        if let Some(pos) = stack.iter().position(|s| *s == m) {
            let mut cycle: Vec<String> = stack[pos..].iter().map(Marking::to_string).collect();
            cycle.push(m.to_string());
            return Err(Error::Livelock {
                witness: cycle.join(" -> "),
            });
        }
        if self.vanishing.len() >= self.max_states {
            return Err(Error::StateOverflow {
                bound: self.max_states,
            });
        }
        stack.push(m.clone());
        let choices = self.model.enabled_indices(&m);
        let total: f64 = choices.iter().map(|&t| self.model.immediate_weight(t)).sum();
        let mut acc: Vec<(Marking, f64)> = Vec::new();
        let mut seen: HashMap<Marking, usize> = HashMap::new();
        for &t in &choices {
            let p = self.model.immediate_weight(t) / total;
            let next = self.model.fire_unchecked(t, &m);
            let sub = self.resolve(next, stack)?;
            for (target, q) in sub.iter() {
                match seen.get(target) {
                    Some(&k) => acc[k].1 += p * q,
                    None => {
                        seen.insert(target.clone(), acc.len());
                        acc.push((target.clone(), p * q));
                    }
                }
            }
        }
        stack.pop();
        let r = Rc::new(acc);
        self.vanishing.insert(m, r.clone());
        Ok(r)
    }
}

/// Explores the tangible reachability graph breadth-first and assembles the
/// generator. Vanishing markings are never stored: timed rates leading into
/// them are split over the tangible markings they resolve to.
pub fn reachability(model: &SpnModel, max_states: usize) -> Result<Ctmc> {
    if max_states == 0 {
        return Err(Error::Domain("max_states must be positive".into()));
    }
    let mut ex = Explorer {
        model,
        max_states,
        index: HashMap::new(),
        states: Vec::new(),
        vanishing: HashMap::new(),
    };
    let mut stack = Vec::new();
    let start = ex.resolve(model.initial_marking().clone(), &mut stack)?;
    let mut initial = Vec::new();
    for (m, p) in start.iter() {
        let i = ex.intern(m.clone())?;
        initial.push((i, *p));
    }

    let timed: Vec<usize> = (0..model.transitions().len())
        .filter(|&t| !model.transitions()[t].is_immediate())
        .collect();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut cursor = 0;
    while cursor < ex.states.len() {
        let m = ex.states[cursor].clone();
        let mut row: Vec<(usize, f64)> = Vec::new();
        for &t in &timed {
            if !model.has_concession(t, &m) {
                continue;
            }
            let rate = model.effective_rate(t, &m);
            let next = model.fire_unchecked(t, &m);
            let targets = ex.resolve(next, &mut stack)?;
            for (target, p) in targets.iter() {
                let j = ex.intern(target.clone())?;
                if j != cursor {
                    add_entry(&mut row, j, rate * p);
                }
            }
        }
        rows.push(row);
        cursor += 1;
    }
    Ok(Ctmc::assemble(ex.states, rows, initial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spn::{ServerSemantics, SpnBuilder};

    fn on_off(lambda: f64, mu: f64) -> SpnModel {
        SpnBuilder::new()
            .place("ON", 1)
            .place("OFF", 0)
            .timed("fail", lambda, ServerSemantics::Single)
            .timed("repair", mu, ServerSemantics::Single)
            .input("ON", "fail", 1)
            .output("fail", "OFF", 1)
            .input("OFF", "repair", 1)
            .output("repair", "ON", 1)
            .build()
            .unwrap()
    }

    #[test]
    fn on_off_generator() {
        let ctmc = reachability(&on_off(0.3, 2.0), 10).unwrap();
        assert_eq!(ctmc.len(), 2);
        assert_eq!(ctmc.to_dense(), vec![vec![-0.3, 0.3], vec![2.0, -2.0]]);
        assert_eq!(ctmc.initial_distribution(), &[(0, 1.0)]);
    }

    #[test]
    fn overflow_reports_bound() {
        let net = SpnBuilder::new()
            .place("A", 5)
            .place("B", 0)
            .timed("t", 1.0, ServerSemantics::Single)
            .timed("u", 1.0, ServerSemantics::Single)
            .input("A", "t", 1)
            .output("t", "B", 1)
            .input("B", "u", 1)
            .output("u", "A", 1)
            .build()
            .unwrap();
        assert_eq!(reachability(&net, 3), Err(Error::StateOverflow { bound: 3 }));
        assert_eq!(reachability(&net, 6).unwrap().len(), 6);
    }

    #[test]
    fn immediate_loop_is_a_livelock() {
        let net = SpnBuilder::new()
            .place("A", 1)
            .place("B", 0)
            .immediate("ab", 1.0, 1)
            .immediate("ba", 1.0, 1)
            .input("A", "ab", 1)
            .output("ab", "B", 1)
            .input("B", "ba", 1)
            .output("ba", "A", 1)
            .build()
            .unwrap();
        match reachability(&net, 10) {
            Err(Error::Livelock { witness }) => assert_eq!(witness, "[1,0] -> [0,1] -> [1,0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weights_split_rates_through_vanishing_markings() {
        // ON --fail--> V, V splits 1:3 into X or Y, each repaired back to ON
        let net = SpnBuilder::new()
            .place("ON", 1)
            .place("V", 0)
            .place("X", 0)
            .place("Y", 0)
            .timed("fail", 2.0, ServerSemantics::Single)
            .immediate("toX", 1.0, 1)
            .immediate("toY", 3.0, 1)
            .timed("fixX", 1.0, ServerSemantics::Single)
            .timed("fixY", 1.0, ServerSemantics::Single)
            .input("ON", "fail", 1)
            .output("fail", "V", 1)
            .input("V", "toX", 1)
            .output("toX", "X", 1)
            .input("V", "toY", 1)
            .output("toY", "Y", 1)
            .input("X", "fixX", 1)
            .output("fixX", "ON", 1)
            .input("Y", "fixY", 1)
            .output("fixY", "ON", 1)
            .build()
            .unwrap();
        let ctmc = reachability(&net, 10).unwrap();
        assert_eq!(ctmc.len(), 3);
        let x = ctmc.state_index(&Marking(vec![0, 0, 1, 0])).unwrap();
        let y = ctmc.state_index(&Marking(vec![0, 0, 0, 1])).unwrap();
        assert!((ctmc.rate(0, x) - 0.5).abs() < 1e-15);
        assert!((ctmc.rate(0, y) - 1.5).abs() < 1e-15);
        assert!(ctmc.states().iter().all(|m| m.0[1] == 0));
    }

    #[test]
    fn vanishing_initial_marking_is_resolved() {
        let net = SpnBuilder::new()
            .place("V", 1)
            .place("A", 0)
            .place("B", 0)
            .immediate("go", 1.0, 1)
            .timed("ab", 1.0, ServerSemantics::Single)
            .timed("ba", 1.0, ServerSemantics::Single)
            .input("V", "go", 1)
            .output("go", "A", 1)
            .input("A", "ab", 1)
            .output("ab", "B", 1)
            .input("B", "ba", 1)
            .output("ba", "A", 1)
            .build()
            .unwrap();
        let ctmc = reachability(&net, 10).unwrap();
        assert_eq!(ctmc.states()[0], Marking(vec![0, 1, 0]));
        assert_eq!(ctmc.len(), 2);
    }

    #[test]
    fn infinite_server_scales_with_enabling_degree() {
        let net = SpnBuilder::new()
            .place("UP", 3)
            .place("DOWN", 0)
            .timed("fail", 0.5, ServerSemantics::Infinite)
            .timed("repair", 4.0, ServerSemantics::Single)
            .input("UP", "fail", 1)
            .output("fail", "DOWN", 1)
            .input("DOWN", "repair", 1)
            .output("repair", "UP", 1)
            .build()
            .unwrap();
        let ctmc = reachability(&net, 10).unwrap();
        assert_eq!(ctmc.len(), 4);
        assert_eq!(ctmc.rate(0, 1), 1.5);
        assert_eq!(ctmc.rate(1, 2), 1.0);
        assert_eq!(ctmc.rate(1, 0), 4.0);
    }

    #[test]
    fn from_rates_validates() {
        let s = vec![Marking(vec![0]), Marking(vec![1])];
        assert!(Ctmc::from_rates(s.clone(), &[(0, 2, 1.0)]).is_err());
        assert!(Ctmc::from_rates(s.clone(), &[(0, 1, -1.0)]).is_err());
        let c = Ctmc::from_rates(s, &[(0, 1, 1.0), (0, 1, 2.0), (1, 1, 5.0)]).unwrap();
        assert_eq!(c.rate(0, 1), 3.0);
        assert_eq!(c.diagonal(1), 0.0);
    }
}
