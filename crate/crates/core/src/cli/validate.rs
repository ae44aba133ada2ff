//! The `validate` suites: the toy walk against its brute-force oracle and
//! the incremental monitor against the batch evaluator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::Suite;
use crate::estimators::{ams_estimate, mc_estimate, AmsParams};
use crate::monitor::random::{random_formula, random_trace, signal_table};
use crate::monitor::{batch_robustness, BoundFormula, WorkList};
use crate::sim::toy::ToyWalk;
use crate::sim::Scenario;

/// Brute-force Monte-Carlo reference for the default toy walk.
#[derive(Clone, Debug, Deserialize)]
pub struct ToyOracle {
    pub barrier: f64,
    pub p_max: f64,
    pub se_max: f64,
}

pub fn toy_oracle() -> ToyOracle {
    serde_json::from_str(include_str!("../../tests/fixtures/toy_oracle.json")).expect("embedded oracle fixture")
}

#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.failed += usize::from(!ok);
        self.lines.push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
    }

    pub fn failures(&self) -> usize {
        self.failed
    }
}

pub fn run(suite: Suite, quick: bool, seed: u64) -> Report {
    let mut report = Report::default();
    if matches!(suite, Suite::Differential | Suite::All) {
        differential(&mut report, if quick { 200 } else { 1000 }, seed);
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        oracle(&mut report, quick, seed);
    }
    report
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9
}

/// Random formulas of depth <= 4 over three signals on traces of up to 50
/// states; every prefix value of both work-list variants must match.
fn differential(report: &mut Report, pairs: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = signal_table(3);
    let mut mismatches = 0;
    let mut first = None;
    for pair in 0..pairs {
        let f = random_formula(&mut rng, 3, 4);
        let len = rng.random_range(1..=50);
        let trace = random_trace(&mut rng, 3, len);
        let spec = BoundFormula::new(f, &table).expect("signal predicates are bound");
        let mut full = WorkList::new(spec.clone());
        let mut pruned = WorkList::new(spec.clone()).pruned();
        for (t, x) in trace.iter().enumerate() {
            full.update(x).expect("finite trace");
            pruned.update(x).expect("finite trace");
            let want = batch_robustness(&spec, &trace, 0, t).expect("in range");
            let got = [full.robustness().expect("data"), pruned.robustness().expect("data")];
            if !got.iter().all(|&g| same(g, want)) {
                mismatches += 1;
                first.get_or_insert(format!("pair {pair} t={t}: {} gave {got:?}, batch {want}", spec.formula()));
            }
        }
    }
    let detail = match first {
        None => format!("{pairs} formula/trace pairs, 0 mismatches"),
        Some(example) => format!("{pairs} pairs, {mismatches} mismatches, first: {example}"),
    };
    report.check("monitor differential", mismatches == 0, detail);
}

fn oracle(report: &mut Report, quick: bool, seed: u64) {
    let o = toy_oracle();
    let walk = ToyWalk::default().with_barrier(o.barrier);
    let spec = BoundFormula::new(walk.formula(), &walk.predicates()).expect("toy predicates");

    let n = if quick { 20_000 } else { 100_000 };
    let detail;
    let ok = match mc_estimate(&walk, &spec, n, seed) {
        Ok(est) => {
            let se = (o.p_max * (1.0 - o.p_max) / n as f64).sqrt();
            let z = (est.p_hat - o.p_max).abs() / (se + o.se_max);
            detail = format!("n={n} p_hat={:e} oracle={:e} |dev|/se={z:.2}", est.p_hat, o.p_max);
            z <= 3.0
        }
        Err(e) => {
            detail = e.to_string();
            false
        }
    };
    report.check("toy mc", ok, detail);

    let (n, k, reps) = if quick { (500, 50, 8) } else { (1000, 100, 50) };
    let mut estimates = Vec::with_capacity(reps);
    for r in 0..reps as u64 {
        match ams_estimate(&walk, &spec, &AmsParams::new(n, k), seed.wrapping_add(r)) {
            Ok(est) => estimates.push(est.p_hat),
            Err(e) => {
                report.check("toy ams", false, e.to_string());
                return;
            }
        }
    }
    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let var = estimates.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let rel_std = var.sqrt() / mean;
    let rel_err = (mean - o.p_max).abs() / o.p_max;
    // with few repetitions the mean itself is too noisy for 25%
    let tol = if quick { (3.0 * rel_std / (reps as f64).sqrt()).max(0.25) } else { 0.25 };
    report.check(
        "toy ams",
        rel_err <= tol && rel_std <= 1.0,
        format!(
            "N={n} K={k} reps={reps} mean={mean:e} oracle={:e} rel_err={rel_err:.3} (<= {tol:.2}) rel_std={rel_std:.3} (<= 1)",
            o.p_max
        ),
    );
}
