//! Row-oriented sparse Gaussian elimination with partial pivoting.
//!
//! The factorization is kept in operational form: the sequence of row
//! updates applied during elimination (the unit lower factor) and the pivot
//! rows (the upper factor). Solving replays the updates on the right-hand
//! side and back-substitutes.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

const PIVOT_THRESHOLD: f64 = 0.1;

/// Square sparse matrix stored by rows.
#[derive(Debug, Clone)]
pub(crate) struct SparseMatrix {
    pub n: usize,
    pub rows: Vec<BTreeMap<usize, f64>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        SparseMatrix {
            n,
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        *self.rows[i].entry(j).or_insert(0.0) += v;
    }

    pub fn set_row(&mut self, i: usize, row: BTreeMap<usize, f64>) {
        self.rows[i] = row;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(&j, &v)| v * x[j]).sum())
            .collect()
    }
}

#[derive(Debug)]
pub(crate) struct SparseLu {
    n: usize,
    /// (pivot row, target row, multiplier), in elimination order.
    updates: Vec<(usize, usize, f64)>,
    /// For step k: the original row index chosen as pivot.
    pivot_row: Vec<usize>,
    /// For step k: entries of the pivot row in columns >= k.
    upper: Vec<Vec<(usize, f64)>>,
}

impl SparseLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n;
        let mut rows: Vec<BTreeMap<usize, f64>> = a.rows.clone();
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, r) in rows.iter().enumerate() {
            for &j in r.keys() {
                col_rows[j].insert(i);
            }
        }
        let scale = rows
            .iter()
            .flat_map(|r| r.values())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut active = vec![true; n];
        let mut updates = Vec::new();
        let mut pivot_row = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);

        for k in 0..n {
            let candidates: Vec<usize> = col_rows[k].iter().copied().filter(|&r| active[r]).collect();
            // threshold pivoting: among entries within PIVOT_THRESHOLD of the
            // column maximum, take the sparsest row
            let col_max = candidates
                .iter()
                .map(|&r| rows[r].get(&k).copied().unwrap_or(0.0).abs())
                .fold(0.0f64, f64::max);
            let mut best: Option<(usize, f64)> = None;
            for &r in &candidates {
                let v = rows[r].get(&k).copied().unwrap_or(0.0).abs();
                if v == 0.0 || v < PIVOT_THRESHOLD * col_max {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((b, _)) => rows[r].len() < rows[b].len(),
                };
                if better {
                    best = Some((r, v));
                }
            }
            let (p, pv) = best.ok_or_else(|| Error::Numerical {
                reason: format!("matrix is singular at column {k}"),
                residual: f64::NAN,
            })?;
            if pv <= scale * 1e-14 {
                return Err(Error::Numerical {
                    reason: format!("pivot {pv:e} at column {k} is negligible"),
                    residual: f64::NAN,
                });
            }
            active[p] = false;
            let prow: Vec<(usize, f64)> = rows[p].iter().map(|(&j, &v)| (j, v)).collect();
            let pivot = rows[p][&k];
            for &r in &candidates {
                if r == p {
                    continue;
                }
                let Some(&v) = rows[r].get(&k) else { continue };
                let factor = v / pivot;
                rows[r].remove(&k);
                col_rows[k].remove(&r);
                if factor == 0.0 {
                    continue;
                }
                for &(j, pvj) in &prow {
                    if j == k {
                        continue;
                    }
                    let e = rows[r].entry(j).or_insert_with(|| {
                        col_rows[j].insert(r);
                        0.0
                    });
                    *e -= factor * pvj;
                }
                updates.push((p, r, factor));
            }
            for &(j, _) in &prow {
                col_rows[j].remove(&p);
            }
            pivot_row.push(p);
            upper.push(prow);
        }
        Ok(SparseLu {
            n,
            updates,
            pivot_row,
            upper,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for &(p, r, f) in &self.updates {
            y[r] -= f * y[p];
        }
        let mut x = vec![0.0; self.n];
        for k in (0..self.n).rev() {
            let mut acc = y[self.pivot_row[k]];
            let mut diag = 0.0;
            for &(j, v) in &self.upper[k] {
                if j == k {
                    diag = v;
                } else {
                    acc -= v * x[j];
                }
            }
            x[k] = acc / diag;
        }
        x
    }
}
