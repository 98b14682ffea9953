use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::lu::{SparseLu, SparseMatrix};
use super::Ctmc;
use crate::error::{Error, Result};

/// Bound on `max_i |(pi Q)_i|`, relative to the largest exit rate when
/// that exceeds one.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Closed recurrent classes of the chain, each sorted, ordered by first state.
pub(crate) fn recurrent_classes(ctmc: &Ctmc) -> Vec<Vec<usize>> {
    let n = ctmc.len();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, ctmc.nonzeros());
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for &(j, _) in ctmc.row(i) {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    let sccs = tarjan_scc(&g);
    let mut component = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            component[v.index()] = c;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|v| {
                ctmc.row(v.index())
                    .iter()
                    .all(|&(j, _)| component[j] == *c)
            })
        })
        .map(|(_, scc)| {
            let mut s: Vec<usize> = scc.iter().map(|v| v.index()).collect();
            s.sort_unstable();
            s
        })
        .collect();
    classes.sort();
    classes
}

/// Stationary distribution `pi` with `pi Q = 0` and `sum(pi) = 1`.
///
/// Solves the transposed generator with its last equation replaced by the
/// normalization condition using sparse LU, followed by one step of
/// iterative refinement. Transient states receive zero mass.
pub fn steady_state(ctmc: &Ctmc) -> Result<Vec<f64>> {
    let n = ctmc.len();
    if n == 0 {
        return Err(Error::structural("ctmc", "no states"));
    }
    let classes = recurrent_classes(ctmc);
    if classes.len() != 1 {
        return Err(Error::Reducible { classes });
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }

    let mut a = SparseMatrix::new(n);
    for i in 0..n {
        a.add(i, i, ctmc.diagonal(i));
        for &(j, r) in ctmc.row(i) {
            a.add(j, i, r);
        }
    }
    let last = n - 1;
    a.set_row(last, (0..n).map(|j| (j, 1.0)).collect::<BTreeMap<_, _>>());
    let mut b = vec![0.0; n];
    b[last] = 1.0;

    let lu = SparseLu::factor(&a)?;
    let mut x = lu.solve(&b);
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let d = lu.solve(&r);
    for (xi, di) in x.iter_mut().zip(&d) {
        *xi += di;
    }

    for v in &mut x {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Numerical {
            reason: "solution has negative or non-finite entries".into(),
            residual: residual(ctmc, &x),
        });
    }
    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }

    let res = residual(ctmc, &x);
    let scale = (0..n).map(|i| -ctmc.diagonal(i)).fold(1.0, f64::max);
    if res > RESIDUAL_TOLERANCE * scale {
        return Err(Error::Numerical {
            reason: "residual above tolerance".into(),
            residual: res,
        });
    }
    Ok(x)
}

/// `max_i |(pi Q)_i|`.
pub(crate) fn residual(ctmc: &Ctmc, pi: &[f64]) -> f64 {
    let n = ctmc.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] += pi[i] * ctmc.diagonal(i);
        for &(j, r) in ctmc.row(i) {
            out[j] += pi[i] * r;
        }
    }
    out.iter().fold(0.0, |m, v| m.max(v.abs()))
}
