//! Three-lane highway lane change: kinematic ego with perception noise,
//! Kalman tracking, a sampling-based receding-horizon controller and
//! scripted traffic.
//!
//! Combined state layout: ego `[s, d, psi, v, a_prev]` followed by
//! `[s, d, psi, v]` per obstacle. `d` is measured from the right road edge,
//! lane `k` is centred at `(k + 0.5) * lane_width`, lane 0 is rightmost.

pub mod config;
pub mod controller;
pub mod dynamics;
pub mod perception;
pub mod rules;
pub mod tracker;

use serde::{Deserialize, Serialize};

use crate::sim::{Sampler, Scenario, Simulator};
use crate::stl::PredicateTable;

pub use config::{
    ConfigError, ControllerConfig, CostWeights, EgoConfig, LaneChangeConfig, Maneuver, ObstacleConfig, PemParams,
    RoadConfig, RuleConstants, TrackerConfig,
};
pub use controller::{Controller, Plan, PredictedObstacle};
pub use dynamics::{dyn_step, scripted_state, VehicleState};
pub use perception::{pem_observe, Observation};
pub use rules::{rule_formula, Rule};
pub use tracker::{predict, Track};

pub const EGO_DIM: usize = 5;
pub const OBSTACLE_DIM: usize = 4;

/// The scenario: a validated config shared by every simulator it builds.
#[derive(Clone, Debug, PartialEq)]
#[derive(Default)]
pub struct LaneChange {
    cfg: LaneChangeConfig,
}

impl LaneChange {
    pub fn new(cfg: LaneChangeConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(LaneChange { cfg })
    }

    pub fn config(&self) -> &LaneChangeConfig {
        &self.cfg
    }

    pub fn rule_formula(&self, rule: Rule) -> crate::stl::Formula {
        rules::rule_formula(rule, &self.cfg)
    }
}


#[derive(Clone, Debug)]
pub struct LaneChangeSim {
    cfg: LaneChangeConfig,
    t: usize,
    ego: VehicleState,
    a_prev: f64,
    tracks: Vec<Track>,
    target_lane: usize,
    state: Vec<f64>,
    last_observations: Vec<Option<Observation>>,
}

/// Everything needed to continue a run: ego, tracker and controller memory.
/// Scripted obstacles are a function of time and need no state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeSnapshot {
    pub t: usize,
    pub ego: VehicleState,
    pub a_prev: f64,
    pub tracks: Vec<Track>,
    pub target_lane: usize,
}

impl LaneChangeSim {
    fn time(&self) -> f64 {
        self.t as f64 * self.cfg.dt
    }

    pub fn obstacles(&self) -> Vec<VehicleState> {
        let t = self.time();
        self.cfg.obstacles.iter().map(|o| scripted_state(o, self.cfg.road.lane_width, t)).collect()
    }

    pub fn ego(&self) -> &VehicleState {
        &self.ego
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn target_lane(&self) -> usize {
        self.target_lane
    }

    /// PEM output of the last step.
    pub fn last_observations(&self) -> &[Option<Observation>] {
        &self.last_observations
    }

    fn refresh_state(&mut self) {
        let e = &self.ego;
        let mut x = vec![e.s, e.d, e.psi, e.v, self.a_prev];
        for o in self.obstacles() {
            x.extend([o.s, o.d, o.psi, o.v]);
        }
        self.state = x;
    }

    pub fn controller(&self) -> Controller<'_> {
        Controller { cfg: &self.cfg.controller, ego: &self.cfg.ego, road: &self.cfg.road, dt: self.cfg.dt }
    }

    /// Constant-velocity footprints of the current tracks over the lookahead.
    pub fn predicted_obstacles(&self) -> Vec<PredictedObstacle> {
        let h = self.cfg.controller.horizon;
        let w = self.cfg.road.lane_width;
        let (d_lo, d_hi) = (w / 2.0, (self.cfg.road.lanes as f64 - 0.5) * w);
        self.tracks
            .iter()
            .zip(&self.cfg.obstacles)
            .map(|(tr, o)| PredictedObstacle {
                path: (1..=h)
                    .map(|k| {
                        let (s, d) = tr.predict_position(k, self.cfg.dt);
                        (s, d.clamp(d_lo, d_hi))
                    })
                    .collect(),
                length: o.length,
                width: o.width,
            })
            .collect()
    }
}

impl Simulator for LaneChangeSim {
    type Snapshot = LaneChangeSnapshot;

    fn state(&self) -> &[f64] {
        &self.state
    }

    fn timestep(&self) -> usize {
        self.t
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn step(&mut self, sampler: &mut Sampler) -> Vec<f64> {
        let dt = self.cfg.dt;
        let truth = self.obstacles();
        let observations = perception::pem_observe(&self.ego, &truth, &self.cfg.pem, sampler);
        for ((track, obs), o) in self.tracks.iter_mut().zip(&observations).zip(&truth) {
            if self.t > 0 {
                track.predict(dt, &self.cfg.tracker);
            }
            match obs {
                Some(z) => {
                    let range = (o.s - self.ego.s).hypot(o.d - self.ego.d);
                    let sd = perception::noise_sd(&self.cfg.pem, range);
                    track.update(z, [sd[0], sd[1]]);
                }
                None => track.staleness += 1,
            }
        }
        self.last_observations = observations;
        let predicted = self.predicted_obstacles();
        let plan = self.controller().plan(&self.ego, self.a_prev, self.target_lane, &predicted);
        self.target_lane = plan.target_lane;
        self.ego = dyn_step(&self.ego, plan.action, dt, &self.cfg.ego);
        self.a_prev = plan.action[0];
        self.t += 1;
        self.refresh_state();
        plan.action.to_vec()
    }

    fn snapshot(&self) -> LaneChangeSnapshot {
        LaneChangeSnapshot {
            t: self.t,
            ego: self.ego,
            a_prev: self.a_prev,
            tracks: self.tracks.clone(),
            target_lane: self.target_lane,
        }
    }

    fn restore(&mut self, s: &LaneChangeSnapshot) {
        self.t = s.t;
        self.ego = s.ego;
        self.a_prev = s.a_prev;
        self.tracks = s.tracks.clone();
        self.target_lane = s.target_lane;
        self.last_observations.clear();
        self.refresh_state();
    }
}

impl Scenario for LaneChange {
    type Sim = LaneChangeSim;

    fn build(&self) -> LaneChangeSim {
        let cfg = self.cfg.clone();
        let e = &cfg.ego;
        let ego = VehicleState {
            s: e.s,
            d: cfg.lane_center(e.lane),
            psi: 0.0,
            v: e.v,
            length: e.length,
            width: e.width,
        };
        let tracks = cfg
            .obstacles
            .iter()
            .map(|o| Track::from_truth(&scripted_state(o, cfg.road.lane_width, 0.0), &cfg.tracker))
            .collect();
        let mut sim = LaneChangeSim {
            target_lane: e.lane,
            cfg,
            t: 0,
            ego,
            a_prev: 0.0,
            tracks,
            state: Vec::new(),
            last_observations: Vec::new(),
        };
        sim.refresh_state();
        sim
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn predicates(&self) -> PredicateTable {
        rules::predicates(&self.cfg)
    }
}
