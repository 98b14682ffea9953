#![allow(dead_code)]

use chainavail::spn::{Marking, ServerSemantics, SpnBuilder, SpnModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A token-conserving move `from -> to` at `rate`.
#[derive(Debug, Clone, Copy)]
pub struct Move {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub infinite: bool,
}

/// A closed net where every transition moves one token between two places.
#[derive(Debug, Clone)]
pub struct RandomNet {
    pub initial: Vec<u32>,
    pub moves: Vec<Move>,
}

impl RandomNet {
    /// 2 to 6 places, 1 to 3 tokens, at most 6 transitions. A cycle through
    /// every place keeps the chain irreducible.
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let places = rng.random_range(2..=6usize);
        let tokens = rng.random_range(1..=3u32);
        let mut initial = vec![0; places];
        for _ in 0..tokens {
            initial[rng.random_range(0..places)] += 1;
        }
        let draw = |from, to, rng: &mut ChaCha8Rng| Move {
            from,
            to,
            rate: 10f64.powf(rng.random_range(-1.0..1.0)),
            infinite: rng.random_bool(0.5),
        };
        let mut moves: Vec<Move> = (0..places).map(|i| draw(i, (i + 1) % places, &mut rng)).collect();
        let extra = rng.random_range(0..=6 - places);
        for _ in 0..extra {
            let from = rng.random_range(0..places);
            let to = (from + rng.random_range(1..places)) % places;
            moves.push(draw(from, to, &mut rng));
        }
        RandomNet { initial, moves }
    }

    pub fn place(i: usize) -> String {
        format!("P{i}")
    }

    pub fn build(&self) -> SpnModel {
        let mut b = SpnBuilder::new();
        for (i, &t) in self.initial.iter().enumerate() {
            b = b.place(&Self::place(i), t);
        }
        for (k, m) in self.moves.iter().enumerate() {
            let name = format!("T{k}");
            let sem = if m.infinite {
                ServerSemantics::Infinite
            } else {
                ServerSemantics::Single
            };
            b = b
                .timed(&name, m.rate, sem)
                .input(&Self::place(m.from), &name, 1)
                .output(&name, &Self::place(m.to), 1);
        }
        b.build().expect("generated nets are well formed")
    }

    /// Every distribution of the tokens over the places.
    pub fn all_markings(&self) -> Vec<Vec<u32>> {
        let total: u32 = self.initial.iter().sum();
        let mut out = Vec::new();
        let mut cur = vec![0; self.initial.len()];
        fill(&mut cur, 0, total, &mut out);
        out
    }

    /// Steady state by brute force: dense generator over all distributions,
    /// one balance equation swapped for normalisation, dense LU.
    pub fn oracle(&self) -> Vec<(Marking, f64)> {
        let states = self.all_markings();
        let n = states.len();
        let index = |m: &[u32]| states.iter().position(|s| s == m).unwrap();
        let mut q = DMatrix::<f64>::zeros(n, n);
        for (i, s) in states.iter().enumerate() {
            for mv in &self.moves {
                let k = s[mv.from];
                if k == 0 {
                    continue;
                }
                let rate = if mv.infinite { mv.rate * f64::from(k) } else { mv.rate };
                let mut t = s.clone();
                t[mv.from] -= 1;
                t[mv.to] += 1;
                let j = index(&t);
                q[(i, j)] += rate;
                q[(i, i)] -= rate;
            }
        }
        let mut a = q.transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let pi = a.lu().solve(&b).expect("irreducible chain");
        states.into_iter().map(Marking).zip(pi.iter().copied()).collect()
    }
}

fn fill(cur: &mut Vec<u32>, i: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if i + 1 == cur.len() {
        cur[i] = left;
        out.push(cur.clone());
        return;
    }
    for k in 0..=left {
        cur[i] = k;
        fill(cur, i + 1, left - k, out);
    }
}

/// Seeds for a batch of random nets, drawn from one master seed.
pub fn net_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.random()).collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
