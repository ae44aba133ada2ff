//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so every line is printed; the process fails if any check does.

mod common;

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stl_splitter::estimators::{
    ams_estimate, ams_probability, ce_estimate, is_fixed_estimate, mc_estimate, AmsParams, CeParams, Estimate,
    ProposalParams,
};
use stl_splitter::lane_change::{LaneChange, Rule};
use stl_splitter::monitor::random::{random_formula, random_trace, signal_table};
use stl_splitter::monitor::window::{leading_window, trailing_window};
use stl_splitter::monitor::{batch_robustness, BoundFormula, Extremum, WorkList};
use stl_splitter::sim::toy::ToyWalk;
use stl_splitter::sim::Scenario;
use stl_splitter::stl::{Formula, Node};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn bind<S: Scenario>(sc: &S, f: Formula) -> Arc<BoundFormula> {
    BoundFormula::new(f, &sc.predicates()).unwrap()
}

fn toy() -> (ToyWalk, Arc<BoundFormula>, f64) {
    let o = common::toy_oracle();
    let walk = ToyWalk::default().with_barrier(o.barrier);
    let spec = bind(&walk, walk.formula());
    (walk, spec, o.p_max)
}

/// Operators present in `f`, as a bit set over the node kinds.
fn operator_bits(f: &Formula) -> u16 {
    f.nodes().iter().fold(0, |acc, n| {
        acc | 1 << match n {
            Node::True => 0,
            Node::Pred { .. } => 1,
            Node::Not(_) => 2,
            Node::And(..) => 3,
            Node::Or(..) => 4,
            Node::Implies(..) => 5,
            Node::Always(..) => 6,
            Node::Eventually(..) => 7,
            Node::Historically(..) => 8,
            Node::Once(..) => 9,
            Node::Until(..) => 10,
        }
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let table = signal_table(3);
    let (pairs, mut checked, mut worst, mut ops, mut max_depth) = (1200, 0usize, 0.0f64, 0u16, 0);
    let mut mismatches = 0;
    for _ in 0..pairs {
        let f = random_formula(&mut rng, 3, 4);
        max_depth = max_depth.max(f.depth());
        ops |= operator_bits(&f);
        let len = rng.random_range(1..=50);
        let trace = random_trace(&mut rng, 3, len);
        let spec = BoundFormula::new(f, &table).unwrap();
        let mut wl = WorkList::new(Arc::clone(&spec));
        for t in 0..len {
            wl.update(&trace[t]).unwrap();
            let online = wl.robustness().unwrap();
            let batch = batch_robustness(&spec, &trace, 0, t).unwrap();
            checked += 1;
            if online != batch {
                let d = (online - batch).abs();
                worst = worst.max(d);
                mismatches += usize::from(!(d <= 1e-9));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let all_ops = ops & 0b111_1111_1110 == 0b111_1111_1110;
    outcome(
        mismatches == 0 && all_ops && max_depth <= 4 && secs < 60.0,
        format!(
            "{pairs} pairs, {checked} prefixes, {mismatches} beyond 1e-9 (max |d| {worst:e}), depth <= {max_depth}, all operators: {all_ops}, {secs:.1}s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let table = signal_table(3);
    let (mut compared, mut mismatches) = (0, 0);
    for _ in 0..500 {
        let f = random_formula(&mut rng, 3, 4);
        let len = rng.random_range(1..=20);
        let trace = random_trace(&mut rng, 3, len);
        let spec = BoundFormula::new(f.clone(), &table).unwrap();
        let t = len - 1;
        for i in 0..=t {
            let r = batch_robustness(&spec, &trace, i, t).unwrap();
            if r != 0.0 {
                compared += 1;
                mismatches += usize::from((r > 0.0) != common::satisfies(&f, &trace, i, t));
            }
        }
    }
    outcome(mismatches == 0, format!("500 pairs, {compared} nonzero values compared, {mismatches} sign mismatches"))
}

fn naive(values: &[f64], width: usize, kind: Extremum, leading: bool) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let (lo, hi) = if leading {
                (i, (i + width).min(values.len()))
            } else {
                ((i + 1).saturating_sub(width), i + 1)
            };
            values[lo..hi].iter().fold(kind.identity(), |a, &v| kind.pick(a, v))
        })
        .collect()
}

fn best_time(reps: usize, mut f: impl FnMut()) -> Duration {
    (0..reps)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed()
        })
        .min()
        .unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(0..120);
        let w = rng.random_range(1..40);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-5i32..5) as f64).collect();
        for kind in [Extremum::Min, Extremum::Max] {
            mismatches += usize::from(leading_window(&values, w, kind) != naive(&values, w, kind, true));
            mismatches += usize::from(trailing_window(&values, w, kind) != naive(&values, w, kind, false));
        }
    }
    // window a quarter of the length: linear vs quadratic is visible
    let big: Vec<f64> = (0..400_000).map(|_| rng.random::<f64>()).collect();
    let t1 = best_time(5, || {
        std::hint::black_box(leading_window(&big[..200_000], 50_000, Extremum::Min));
    });
    let t2 = best_time(5, || {
        std::hint::black_box(leading_window(&big, 100_000, Extremum::Min));
    });
    let ratio = t2.as_secs_f64() / t1.as_secs_f64();
    outcome(
        mismatches == 0 && ratio <= 3.0,
        format!("10000 buffers, {mismatches} mismatches; time ratio at 2n = {ratio:.2}"),
    )
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (walk, spec, p) = toy();
    let est: Vec<f64> = (0..50)
        .map(|s| ams_estimate(&walk, &spec, &AmsParams::new(1000, 100), 1000 + s).unwrap().p_hat)
        .collect();
    let (m, sd) = mean_std(&est);
    let secs = start.elapsed().as_secs_f64();
    let rel_err = (m - p).abs() / p;
    outcome(
        rel_err <= 0.25 && sd / m <= 1.0 && secs < 300.0,
        format!("p*={p:e}, mean {m:e} (rel err {rel_err:.3}), rel std {:.3}, {secs:.1}s", sd / m),
    )
}

fn criterion_5() -> Outcome {
    let (walk, spec, p) = toy();
    let (mut se_ams, mut se_mc, mut mc_zero) = (0.0, 0.0, 0);
    let reps = 50;
    for s in 0..reps {
        let a = ams_estimate(&walk, &spec, &AmsParams::new(200, 20), 2000 + s).unwrap();
        let n = (a.total_simulation_steps as usize).div_ceil(walk.horizon);
        let m = mc_estimate(&walk, &spec, n, 3000 + s).unwrap();
        se_ams += (a.p_hat - p).powi(2);
        se_mc += (m.p_hat - p).powi(2);
        mc_zero += usize::from(m.p_hat == 0.0);
    }
    let rmse = |se: f64| (se / reps as f64).sqrt() / p;
    outcome(
        rmse(se_ams) < rmse(se_mc),
        format!("relative RMSE at matched steps: AMS {:.3}, MC {:.3} (MC zero in {mc_zero}/{reps})", rmse(se_ams), rmse(se_mc)),
    )
}

fn criterion_6() -> Outcome {
    // N = 4: one discard at each of two stages, two final failures
    let p = ams_probability(4, &[1, 1], 2);
    outcome(p == 9.0 / 32.0, format!("(3/4)(3/4)(2/4) = {p}"))
}

fn strictly_decreasing(levels: &[f64]) -> bool {
    levels.windows(2).all(|w| w[1] < w[0])
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let sc = LaneChange::default();
    let mut notes = Vec::new();
    let mut pass = true;
    let mut phi1 = (0.0, 0.0);
    let mut mc_zero_seeds = 0;
    for seed in 0..5 {
        let mut zero_rare = false;
        for rule in Rule::ALL {
            let spec = bind(&sc, sc.rule_formula(rule));
            let ams = ams_estimate(&sc, &spec, &AmsParams::new(250, 25), seed).unwrap();
            let mc = mc_estimate(&sc, &spec, 250, seed).unwrap();
            let good = ams.p_hat > 0.0 && !ams.extinction && strictly_decreasing(&ams.levels);
            if !good {
                pass = false;
                notes.push(format!("seed {seed} {}: AMS p_hat={:e} extinction={}", rule.name(), ams.p_hat, ams.extinction));
            }
            if rule == Rule::Phi1 {
                phi1.0 += ams.p_hat / 5.0;
                phi1.1 += mc.p_hat / 5.0;
            } else {
                zero_rare |= mc.p_hat == 0.0;
            }
        }
        mc_zero_seeds += usize::from(zero_rare);
    }
    let ratio = phi1.0.max(phi1.1) / phi1.0.min(phi1.1);
    pass &= mc_zero_seeds == 5 && ratio <= 3.0;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 900.0;
    outcome(
        pass,
        format!(
            "MC zero on a rare rule in {mc_zero_seeds}/5 seeds; phi1 AMS {:.3e} vs MC {:.3e} (x{ratio:.2}); {secs:.0}s{}",
            phi1.0,
            phi1.1,
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

fn criterion_8() -> Outcome {
    let sc = LaneChange::default();
    let spec = bind(&sc, sc.rule_formula(Rule::Phi4));
    let mut counts = Vec::new();
    for k in [2, 25, 125, 225] {
        let runs: Vec<Estimate> = (0..5).map(|s| ams_estimate(&sc, &spec, &AmsParams::new(250, k), s).unwrap()).collect();
        let extinct = runs.iter().filter(|e| e.extinction).count();
        let stages: Vec<usize> = runs.iter().map(|e| e.levels.len()).collect();
        counts.push((k, extinct, stages));
    }
    let base = counts[1].1;
    let pass = counts.iter().any(|&(k, e, _)| (k == 2 || k == 225) && e > base);
    let detail = counts.iter().map(|(k, e, st)| format!("K={k}: {e}/5 extinct, stages {st:?}")).collect::<Vec<_>>().join("; ");
    outcome(pass, detail)
}

fn cli_json(args: &[&str], workers: usize) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_stl-splitter"))
        .args(args)
        .args(["--workers", &workers.to_string()])
        .env_remove("STL_SPLITTER_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    Ok(text.lines().filter(|l| !l.contains("\"wall_time_s\"")).collect::<Vec<_>>().join("\n"))
}

fn criterion_9() -> Outcome {
    let invocations: [&[&str]; 5] = [
        &["estimate", "--builtin", "toy_walk", "--method", "ams", "--n", "400", "--k", "40", "--seed", "7"],
        &["estimate", "--builtin", "toy_walk", "--method", "ce", "--n", "300", "--stages", "4", "--seed", "7"],
        &["estimate", "--builtin", "toy_walk", "--method", "mc", "--n", "5000", "--seed", "7"],
        &["estimate", "--builtin", "lane_change", "--rule", "phi4", "--method", "ams", "--n", "60", "--k", "6", "--seed", "3"],
        &["estimate", "--builtin", "lane_change", "--rule", "phi2", "--method", "is", "--n", "60", "--seed", "3"],
    ];
    let mut differing = Vec::new();
    for args in invocations {
        let runs: Result<Vec<String>, String> = [1, 2, 4, 1].iter().map(|&w| cli_json(args, w)).collect();
        match runs {
            Ok(r) if r[0].contains("\"p_hat\"") && r.iter().all(|x| *x == r[0]) => {}
            _ => differing.push(args[2..].join(" ")),
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} invocations x workers 1,2,4,1; differing: {differing:?}", invocations.len()),
    )
}

fn criterion_10() -> Outcome {
    let mut exact = true;
    let walk = ToyWalk::default().with_barrier(8.0);
    let spec = bind(&walk, walk.formula());
    let sc = LaneChange::default();
    let lane = bind(&sc, sc.rule_formula(Rule::Phi2));
    for seed in 0..3 {
        let mc = mc_estimate(&walk, &spec, 2000, seed).unwrap();
        let is = is_fixed_estimate(&walk, &spec, &ProposalParams::target(), 2000, seed).unwrap();
        exact &= mc.p_hat == is.p_hat && mc.total_simulation_steps == is.total_simulation_steps;
        let mc = mc_estimate(&sc, &lane, 40, seed).unwrap();
        let is = is_fixed_estimate(&sc, &lane, &ProposalParams::target(), 40, seed).unwrap();
        exact &= mc.p_hat == is.p_hat;
    }
    // one step, barrier at zero: P(x_1 > 0) = 1/2
    let coin = ToyWalk::new(0.0, 1.0, 1).with_barrier(0.0);
    let coin_spec = bind(&coin, coin.formula());
    let params = CeParams::new(2000, 3);
    let ce = ce_estimate(&coin, &coin_spec, &params, 5).unwrap();
    let se = (0.25 / params.n_per_stage as f64).sqrt();
    let close = (ce.p_hat - 0.5).abs() <= 3.0 * se;
    outcome(
        exact && close,
        format!("IS(target) == MC exactly: {exact}; CE p_hat {:.4} vs 0.5 (3 SE = {:.4})", ce.p_hat, 3.0 * se),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("monitor equals batch semantics", criterion_1),
        ("sign soundness", criterion_2),
        ("sliding-window oracle", criterion_3),
        ("AMS statistical validity", criterion_4),
        ("AMS beats MC at equal budget", criterion_5),
        ("AMS product arithmetic", criterion_6),
        ("lane-change rare-event pattern", criterion_7),
        ("discard-rate sensitivity", criterion_8),
        ("determinism across workers", criterion_9),
        ("IS identity and CE", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(&format!(" {f}"))) {
            continue;
        }
        let o = check();
        failed += usize::from(!o.pass);
        println!("{id} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} criterion check(s) failed");
        std::process::exit(1);
    }
}
