//! Traffic rules over the combined state and the margins of their predicates.
//!
//! Obstacle arguments are 1-based: `in_front_of(2)` refers to the second
//! configured obstacle.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{LaneChangeConfig, RuleConstants};
use super::dynamics::{nearest_lane, shared_lane};
use super::{EGO_DIM, OBSTACLE_DIM};
use crate::stl::{Formula, Interval, PredicateTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// Safe distance from vehicles in front.
    Phi1,
    /// No unnecessary braking.
    Phi2,
    /// Preserve traffic flow.
    Phi3,
    /// Don't drive faster than traffic on the left.
    Phi4,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Phi1, Rule::Phi2, Rule::Phi3, Rule::Phi4];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Phi1 => "phi1",
            Rule::Phi2 => "phi2",
            Rule::Phi3 => "phi3",
            Rule::Phi4 => "phi4",
        }
    }
}

impl FromStr for Rule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule `{s}` (expected phi1, phi2, phi3 or phi4)"))
    }
}

/// Geometry and constants the margins need besides the state.
#[derive(Clone, Debug)]
struct Scene {
    lane_width: f64,
    lanes: usize,
    ego_extent: (f64, f64),
    obstacle_extent: Vec<(f64, f64)>,
    c: RuleConstants,
}

struct Car {
    s: f64,
    d: f64,
    v_long: f64,
    v_lat: f64,
    length: f64,
    width: f64,
}

impl Scene {
    fn ego(&self, x: &[f64]) -> Car {
        let (length, width) = self.ego_extent;
        Car { s: x[0], d: x[1], v_long: x[3] * x[2].cos(), v_lat: x[3] * x[2].sin(), length, width }
    }

    fn obstacle(&self, x: &[f64], j: usize) -> Car {
        let b = EGO_DIM + OBSTACLE_DIM * j;
        let (length, width) = self.obstacle_extent[j];
        Car { s: x[b], d: x[b + 1], v_long: x[b + 3] * x[b + 2].cos(), v_lat: x[b + 3] * x[b + 2].sin(), length, width }
    }

    fn index(&self, args: &[f64]) -> Option<usize> {
        let k = args[0];
        (k >= 1.0 && k.fract() == 0.0 && (k as usize) <= self.obstacle_extent.len()).then(|| k as usize - 1)
    }

    fn same_lane(&self, e: &Car, o: &Car) -> f64 {
        shared_lane((e.d, e.width), (o.d, o.width), self.lane_width, self.lanes)
    }

    fn gap(e: &Car, o: &Car) -> f64 {
        (o.s - o.length / 2.0) - (e.s + e.length / 2.0)
    }

    fn safe_distance(&self, e: &Car, o: &Car) -> f64 {
        let c = &self.c;
        let d_safe = e.v_long * c.t_react + (e.v_long.powi(2) - o.v_long.powi(2)).max(0.0) / (2.0 * c.a_brake.abs());
        Scene::gap(e, o) - d_safe
    }

    /// Lanes by which `o` is to the left of the ego, less one half, with
    /// lateral positions measured in fractional lanes.
    fn left_of(&self, e: &Car, o: &Car) -> f64 {
        (o.d - e.d) / self.lane_width - 0.5
    }

    fn cut_in(&self, e: &Car, o: &Car) -> f64 {
        let w = self.lane_width;
        let lane = nearest_lane(e.d, w, self.lanes) as f64;
        let (lo, hi) = (lane * w, (lane + 1.0) * w);
        let overlap = (o.d + o.width / 2.0).min(hi) - (o.d - o.width / 2.0).max(lo);
        let centre = (lane + 0.5) * w;
        let toward = o.v_lat * (centre - o.d).signum();
        overlap.min(toward - self.c.cut_in_speed).min(Scene::gap(e, o))
    }

    /// Largest margin by which some obstacle is a leader within `d_lead`
    /// that is slower than `v_ref`.
    fn leader(&self, x: &[f64], v_ref: impl Fn(&Car) -> f64) -> f64 {
        let e = self.ego(x);
        (0..self.obstacle_extent.len())
            .map(|j| {
                let o = self.obstacle(x, j);
                let gap = Scene::gap(&e, &o);
                self.same_lane(&e, &o).min(gap).min(self.c.d_lead - gap).min(v_ref(&e) - o.v_long)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn slow_traffic(&self, x: &[f64], j: usize) -> f64 {
        let o = self.obstacle(x, j);
        let fastest = (0..self.obstacle_extent.len())
            .map(|k| self.obstacle(x, k))
            .filter(|n| (n.s - o.s).abs() <= self.c.d_near && self.same_lane(n, &o) > 0.0)
            .map(|n| n.v_long)
            .fold(f64::NEG_INFINITY, f64::max);
        self.c.v_queue - fastest
    }
}

/// Binds every rule predicate for the obstacles of `cfg`.
pub fn predicates(cfg: &LaneChangeConfig) -> PredicateTable {
    let scene = Arc::new(Scene {
        lane_width: cfg.road.lane_width,
        lanes: cfg.road.lanes,
        ego_extent: (cfg.ego.length, cfg.ego.width),
        obstacle_extent: cfg.obstacles.iter().map(|o| (o.length, o.width)).collect(),
        c: cfg.rules.clone(),
    });
    let mut t = PredicateTable::new();
    let pairwise = |t: &mut PredicateTable, name: &str, f: fn(&Scene, &Car, &Car, &[f64], usize) -> f64| {
        let sc = Arc::clone(&scene);
        t.insert_with_args(name, 1, move |x, a| match sc.index(a) {
            Some(j) => f(&sc, &sc.ego(x), &sc.obstacle(x, j), x, j),
            None => f64::NAN,
        });
    };
    pairwise(&mut t, "in_same_lane", |sc, e, o, _, _| sc.same_lane(e, o));
    pairwise(&mut t, "in_front_of", |_, e, o, _, _| Scene::gap(e, o));
    pairwise(&mut t, "keeps_safe_distance_prec", |sc, e, o, _, _| sc.safe_distance(e, o));
    pairwise(&mut t, "cut_in", |sc, e, o, _, _| sc.cut_in(e, o));
    pairwise(&mut t, "left_of", |sc, e, o, _, _| sc.left_of(e, o));
    pairwise(&mut t, "drives_faster", |_, e, o, _, _| e.v_long - o.v_long);
    pairwise(&mut t, "slightly_higher_speed", |sc, e, o, _, _| sc.c.dv_max - (e.v_long - o.v_long));
    pairwise(&mut t, "in_slow_traffic", |sc, _, _, x, j| sc.slow_traffic(x, j));
    pairwise(&mut t, "on_main_carriageway", |_, _, _, _, _| 1.0);

    let sc = Arc::clone(&scene);
    t.insert("unnecessary_braking", move |x| {
        let justified = sc.leader(x, |e| e.v_long);
        (sc.c.a_braking_threshold - x[4]).min(-justified)
    });
    let sc = Arc::clone(&scene);
    t.insert("slow_leading_vehicle", move |x| sc.leader(x, |_| sc.c.v_slow));
    let sc = Arc::clone(&scene);
    t.insert("preserves_flow", move |x| sc.ego(x).v_long - sc.c.v_flow_min);
    t.insert("on_access_ramp", |_| -1.0);
    t
}

fn p(name: &str, k: usize) -> Formula {
    Formula::pred_with(name, vec![k as f64])
}

/// STL formula of `rule` over the obstacles of `cfg`. The vehicle rules
/// (`phi1`, `phi4`) range over moving obstacles only.
pub fn rule_formula(rule: Rule, cfg: &LaneChangeConfig) -> Formula {
    let always = |f: Formula| Formula::always(Interval::unbounded(0), f);
    let vehicles: Vec<usize> =
        cfg.obstacles.iter().enumerate().filter(|(_, o)| o.is_dynamic()).map(|(j, _)| j + 1).collect();
    match rule {
        Rule::Phi1 => {
            let t_cut = (cfg.rules.t_cut / cfg.dt).round() as usize;
            always(
                Formula::conjunction(vehicles.iter().map(|&k| {
                    let first_cut_in = p("cut_in", k)
                        .and(Formula::historically(Interval::unbounded(1), p("cut_in", k).not()));
                    p("in_same_lane", k)
                        .and(p("in_front_of", k))
                        .and(Formula::once(Interval::bounded(0, t_cut), first_cut_in).not())
                        .implies(p("keeps_safe_distance_prec", k))
                }))
                .unwrap_or_else(Formula::truth),
            )
        }
        Rule::Phi2 => always(Formula::pred("unnecessary_braking").not()),
        Rule::Phi3 => always(Formula::pred("slow_leading_vehicle").not().implies(Formula::pred("preserves_flow"))),
        Rule::Phi4 => always(
            Formula::conjunction(vehicles.iter().map(|&k| {
                p("left_of", k).and(p("drives_faster", k)).implies(
                    p("in_slow_traffic", k)
                        .and(p("slightly_higher_speed", k))
                        .or(Formula::pred("on_access_ramp").and(p("on_main_carriageway", k))),
                )
            }))
            .unwrap_or_else(Formula::truth),
        ),
    }
}
