//! Random formulas and traces for differential testing of the monitor.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::stl::{Formula, Interval, PredicateTable};

/// Predicates `p0..p{dim-1}`; `pk` reads component `k` of the state.
pub fn signal_table(dim: usize) -> PredicateTable {
    let mut table = PredicateTable::new();
    for k in 0..dim {
        table.insert(format!("p{k}"), move |x: &[f64]| x[k]);
    }
    table
}

fn interval<R: Rng + ?Sized>(rng: &mut R) -> Interval {
    let lo = rng.random_range(0..=3);
    if rng.random_bool(0.25) {
        Interval::unbounded(lo)
    } else {
        Interval::bounded(lo, lo + rng.random_range(0..=5))
    }
}

/// A random formula over `p0..p{dim-1}` of depth at most `max_depth`.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_depth: usize) -> Formula {
    if max_depth <= 1 || rng.random_bool(0.2) {
        return if rng.random_bool(0.05) {
            Formula::truth()
        } else {
            Formula::pred(format!("p{}", rng.random_range(0..dim)))
        };
    }
    let d = max_depth - 1;
    match rng.random_range(0..10) {
        0 => random_formula(rng, dim, d).not(),
        1 => random_formula(rng, dim, d).and(random_formula(rng, dim, d)),
        2 => random_formula(rng, dim, d).or(random_formula(rng, dim, d)),
        3 => random_formula(rng, dim, d).implies(random_formula(rng, dim, d)),
        4 => Formula::always(interval(rng), random_formula(rng, dim, d)),
        5 => Formula::eventually(interval(rng), random_formula(rng, dim, d)),
        6 => {
            let iv = interval(rng);
            random_formula(rng, dim, d).until(iv, random_formula(rng, dim, d))
        }
        7 => Formula::historically(interval(rng), random_formula(rng, dim, d)),
        8 => Formula::once(interval(rng), random_formula(rng, dim, d)),
        _ => Formula::pred(format!("p{}", rng.random_range(0..dim))),
    }
}

/// `len` states of dimension `dim` with standard normal components.
pub fn random_trace<R: Rng + ?Sized>(rng: &mut R, dim: usize, len: usize) -> Vec<Vec<f64>> {
    (0..len).map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}
