//! Browser front end for the estimator: monitor a pasted trace, run one
//! lane-change trajectory, and estimate failure probabilities.
//!
//! The plain functions return JSON strings so they can be tested natively;
//! the `wasm_bindgen` wrappers only turn errors into JS exceptions.

use serde::Serialize;
use stl_splitter::estimators::{ams_estimate, mc_estimate, AmsParams};
use stl_splitter::lane_change::{LaneChange, Rule};
use stl_splitter::monitor::{BoundFormula, WorkList};
use stl_splitter::sim::toy::ToyWalk;
use stl_splitter::sim::{read_states_csv, run_trajectory, NoiseStream, RunOptions, Sampler, Scenario};
use stl_splitter::stl::{parse_formula, PredicateTable};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Levels {
    levels: Vec<f64>,
}

/// Prefix robustness of `formula` over a CSV trace whose columns act as
/// predicates of the same name (a `t` column is skipped).
pub fn monitor_trace(formula: &str, csv: &str) -> Result<String, String> {
    let header = csv.lines().next().ok_or("empty trace")?;
    let names: Vec<&str> = header.split(',').map(str::trim).filter(|h| *h != "t").collect();
    let mut table = PredicateTable::new();
    for (k, name) in names.iter().enumerate() {
        table.insert(*name, move |x: &[f64]| x[k]);
    }
    let f = parse_formula(formula, &table).map_err(|e| e.to_string())?;
    let states = read_states_csv(csv.as_bytes()).map_err(|e| e.to_string())?;
    let spec = BoundFormula::new(f, &table).map_err(|e| e.to_string())?;
    let mut wl = WorkList::new(spec);
    let mut levels = Vec::with_capacity(states.len());
    for x in &states {
        wl.update(x).map_err(|e| e.to_string())?;
        levels.push(wl.robustness().map_err(|e| e.to_string())?);
    }
    Ok(serde_json::to_string(&Levels { levels }).expect("plain numbers"))
}

#[derive(Serialize)]
struct Car {
    s: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Serialize)]
struct Run {
    lane_width: f64,
    lanes: usize,
    ego: Car,
    obstacles: Vec<Car>,
    levels: Vec<f64>,
}

fn rule(name: &str) -> Result<Rule, String> {
    name.parse()
}

/// One closed-loop lane-change run on stream `stream` of `seed`, with the
/// prefix robustness of `rule_name`.
pub fn simulate(rule_name: &str, seed: u64, stream: u64) -> Result<String, String> {
    let sc = LaneChange::default();
    let spec = BoundFormula::new(sc.rule_formula(rule(rule_name)?), &sc.predicates()).map_err(|e| e.to_string())?;
    let run = run_trajectory(&sc, &spec, Sampler::target(NoiseStream::new(seed, stream)), RunOptions::default())
        .map_err(|e| e.to_string())?;
    let states = run.trajectory.states();
    let column = |k: usize| states.iter().map(|x| x[k]).collect::<Vec<f64>>();
    let n_obs = sc.config().obstacles.len();
    let out = Run {
        lane_width: sc.config().road.lane_width,
        lanes: sc.config().road.lanes,
        ego: Car { s: column(0), d: column(1) },
        obstacles: (0..n_obs).map(|j| Car { s: column(5 + 4 * j), d: column(6 + 4 * j) }).collect(),
        levels: run.levels,
    };
    Ok(serde_json::to_string(&out).expect("plain numbers"))
}

/// AMS or MC estimate as the CLI's JSON. `scenario` is `toy_walk` (rule
/// ignored) or `lane_change`.
pub fn estimate(scenario: &str, rule_name: &str, method: &str, n: usize, k: usize, seed: u64) -> Result<String, String> {
    fn go<S: Scenario>(sc: &S, f: stl_splitter::stl::Formula, method: &str, n: usize, k: usize, seed: u64) -> Result<String, String> {
        let spec = BoundFormula::new(f, &sc.predicates()).map_err(|e| e.to_string())?;
        let est = match method {
            "ams" => ams_estimate(sc, &spec, &AmsParams::new(n, k), seed),
            "mc" => mc_estimate(sc, &spec, n, seed),
            other => return Err(format!("unknown method `{other}` (expected ams or mc)")),
        }
        .map_err(|e| e.to_string())?;
        Ok(est.to_json())
    }
    match scenario {
        "toy_walk" => {
            let walk = ToyWalk::default();
            go(&walk, walk.formula(), method, n, k, seed)
        }
        "lane_change" => {
            let sc = LaneChange::default();
            go(&sc, sc.rule_formula(rule(rule_name)?), method, n, k, seed)
        }
        other => Err(format!("unknown scenario `{other}`")),
    }
}

#[wasm_bindgen(js_name = monitorTrace)]
pub fn monitor_trace_js(formula: &str, csv: &str) -> Result<String, JsValue> {
    monitor_trace(formula, csv).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(rule_name: &str, seed: u32, stream: u32) -> Result<String, JsValue> {
    simulate(rule_name, seed.into(), stream.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = estimate)]
pub fn estimate_js(scenario: &str, rule_name: &str, method: &str, n: u32, k: u32, seed: u32) -> Result<String, JsValue> {
    estimate(scenario, rule_name, method, n as usize, k as usize, seed.into()).map_err(|e| JsValue::from_str(&e))
}
