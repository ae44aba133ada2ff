#![allow(dead_code)]

use stl_splitter::stl::{Bound, Formula, Interval, Node};

/// Boolean satisfaction of `f` at index `i` over the prefix `trace[0..=t]`,
/// where predicate `pk` holds iff `x[k] > 0`.
pub fn satisfies(f: &Formula, trace: &[Vec<f64>], i: usize, t: usize) -> bool {
    holds(f, f.root(), trace, i, t)
}

fn window(i: usize, iv: Interval, t: usize, future: bool) -> Vec<usize> {
    let hi = match iv.hi() {
        Bound::Finite(h) => Some(h),
        Bound::Unbounded => None,
    };
    (0..=t)
        .filter(|&k| {
            let (d, ok) = if future { (k as i64 - i as i64, k >= i) } else { (i as i64 - k as i64, k <= i) };
            ok && d >= iv.lo() as i64 && hi.is_none_or(|h| d <= h as i64)
        })
        .collect()
}

fn holds(f: &Formula, id: usize, trace: &[Vec<f64>], i: usize, t: usize) -> bool {
    let h = |c: usize, k: usize| holds(f, c, trace, k, t);
    match f.node(id) {
        Node::True => true,
        Node::Pred { name, .. } => {
            let k: usize = name.trim_start_matches('p').parse().expect("signal predicate");
            trace[i][k] > 0.0
        }
        Node::Not(c) => !h(*c, i),
        Node::And(l, r) => h(*l, i) && h(*r, i),
        Node::Or(l, r) => h(*l, i) || h(*r, i),
        Node::Implies(l, r) => !h(*l, i) || h(*r, i),
        Node::Always(iv, c) => window(i, *iv, t, true).into_iter().all(|k| h(*c, k)),
        Node::Eventually(iv, c) => window(i, *iv, t, true).into_iter().any(|k| h(*c, k)),
        Node::Historically(iv, c) => window(i, *iv, t, false).into_iter().all(|k| h(*c, k)),
        Node::Once(iv, c) => window(i, *iv, t, false).into_iter().any(|k| h(*c, k)),
        Node::Until(iv, l, r) => window(i, *iv, t, true)
            .into_iter()
            .any(|k2| h(*r, k2) && (i..=k2).all(|k1| h(*l, k1))),
    }
}

/// Asymptotic two-sample Kolmogorov-Smirnov p-value.
pub fn ks_two_sample_p(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powi(k as i32 - 1) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

use serde::{Deserialize, Serialize};
use stl_splitter::sim::{Sampler, Scenario, Simulator};
use stl_splitter::stl::PredicateTable;

/// One-step scenario whose run fails with probability `q`.
pub struct Coin {
    pub q: f64,
}

#[derive(Clone)]
pub struct CoinSim {
    x: [f64; 1],
    t: usize,
    q: f64,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct CoinSnap(f64, usize);

impl Simulator for CoinSim {
    type Snapshot = CoinSnap;
    fn state(&self) -> &[f64] {
        &self.x
    }
    fn timestep(&self) -> usize {
        self.t
    }
    fn action_dim(&self) -> usize {
        0
    }
    fn step(&mut self, sampler: &mut Sampler) -> Vec<f64> {
        self.x[0] = if sampler.detect(1.0 - self.q) { 1.0 } else { -1.0 };
        self.t += 1;
        Vec::new()
    }
    fn snapshot(&self) -> CoinSnap {
        CoinSnap(self.x[0], self.t)
    }
    fn restore(&mut self, s: &CoinSnap) {
        self.x = [s.0];
        self.t = s.1;
    }
}

impl Scenario for Coin {
    type Sim = CoinSim;
    fn build(&self) -> CoinSim {
        CoinSim { x: [1.0], t: 0, q: self.q }
    }
    fn horizon(&self) -> usize {
        1
    }
    fn dt(&self) -> f64 {
        1.0
    }
    fn predicates(&self) -> PredicateTable {
        let mut t = PredicateTable::new();
        t.insert("ok", |x| x[0]);
        t
    }
}

#[derive(Deserialize)]
pub struct ToyOracle {
    pub barrier: f64,
    pub samples: u64,
    pub p_max: f64,
    pub se_max: f64,
    pub p_min: f64,
    pub se_min: f64,
}

pub fn toy_oracle() -> ToyOracle {
    let text = include_str!("../fixtures/toy_oracle.json");
    serde_json::from_str(text).expect("oracle fixture")
}
