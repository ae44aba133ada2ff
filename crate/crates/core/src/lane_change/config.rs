use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario config: {0}")]
    Invalid(String),
}

/// Full description of a lane-change scenario. Every field has a default,
/// so a JSON file only needs the values it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaneChangeConfig {
    pub dt: f64,
    /// Number of steps `T`.
    pub horizon: usize,
    pub road: RoadConfig,
    pub ego: EgoConfig,
    pub obstacles: Vec<ObstacleConfig>,
    pub pem: PemParams,
    pub tracker: TrackerConfig,
    pub controller: ControllerConfig,
    pub rules: RuleConstants,
}

impl Default for LaneChangeConfig {
    fn default() -> Self {
        LaneChangeConfig {
            dt: 0.1,
            horizon: 40,
            road: RoadConfig::default(),
            ego: EgoConfig::default(),
            obstacles: vec![
                // parked in the centre lane
                ObstacleConfig::new(40.0, 1, 0.0),
                // slow centre-lane car moving into the left lane
                ObstacleConfig::new(50.0, 1, 5.0).with_lane_change(0.6, 1.0, 2),
                // right-lane car merging into the centre lane
                ObstacleConfig::new(50.0, 0, 10.0).with_lane_change(1.0, 1.0, 1),
            ],
            pem: PemParams::default(),
            tracker: TrackerConfig::default(),
            controller: ControllerConfig::default(),
            rules: RuleConstants::default(),
        }
    }
}

impl LaneChangeConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: LaneChangeConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.road.lanes == 0 || !(self.road.lane_width > 0.0) {
            return bad("road needs at least one lane of positive width");
        }
        if self.ego.lane >= self.road.lanes || self.controller.goal_lane >= self.road.lanes || self.obstacles.iter().any(|o| o.lane >= self.road.lanes) {
            return bad("lane index outside the road");
        }
        if self.obstacles.iter().any(|o| o.maneuver.is_some_and(|m| m.target_lane >= self.road.lanes || !(m.duration > 0.0))) {
            return bad("lane change needs a valid target lane and positive duration");
        }
        if self.ego.v < 0.0 || self.obstacles.iter().any(|o| o.v < 0.0) {
            return bad("speeds must be non-negative");
        }
        if self.pem.noise_base.iter().chain(&self.pem.noise_range_slope).any(|s| *s < 0.0) {
            return bad("PEM noise levels must be non-negative");
        }
        let c = &self.controller;
        if c.accelerations.is_empty() || !(c.a_min < 0.0 && c.a_max > 0.0) {
            return bad("controller needs candidate accelerations and a_min < 0 < a_max");
        }
        if c.accelerations.iter().any(|a| *a < c.a_min || *a > c.a_max) {
            return bad("candidate acceleration outside [a_min, a_max]");
        }
        if c.weights.as_array().iter().any(|w| *w < 0.0) {
            return bad("cost weights must be non-negative");
        }
        if c.horizon == 0 {
            return bad("controller horizon must be at least one step");
        }
        Ok(())
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.road.lane_width
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadConfig {
    pub lanes: usize,
    pub lane_width: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        RoadConfig { lanes: 3, lane_width: 3.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgoConfig {
    pub s: f64,
    pub lane: usize,
    pub v: f64,
    pub length: f64,
    pub width: f64,
    pub wheelbase: f64,
    pub v_max: f64,
    /// Steering angle limit (rad).
    pub max_steer: f64,
}

impl Default for EgoConfig {
    fn default() -> Self {
        EgoConfig { s: 15.0, lane: 1, v: 20.0, length: 4.5, width: 2.0, wheelbase: 2.7, v_max: 40.0, max_steer: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Maneuver {
    /// Seconds after the start of the run.
    pub start: f64,
    pub duration: f64,
    pub target_lane: usize,
}

/// A scripted vehicle driving at constant speed, optionally changing lane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub s: f64,
    pub lane: usize,
    pub v: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub maneuver: Option<Maneuver>,
}

fn default_length() -> f64 {
    4.5
}

fn default_width() -> f64 {
    2.0
}

impl ObstacleConfig {
    pub fn new(s: f64, lane: usize, v: f64) -> Self {
        ObstacleConfig { s, lane, v, length: default_length(), width: default_width(), maneuver: None }
    }

    pub fn with_lane_change(mut self, start: f64, duration: f64, target_lane: usize) -> Self {
        self.maneuver = Some(Maneuver { start, duration, target_lane });
        self
    }

    pub fn is_dynamic(&self) -> bool {
        self.v > 0.0 || self.maneuver.is_some()
    }
}

/// Logistic detection and range-dependent Gaussian offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PemParams {
    /// Coefficients over (1, range, occlusion).
    pub detect_coeffs: [f64; 3],
    /// Offset standard deviations for (s, d, psi) at zero range.
    pub noise_base: [f64; 3],
    /// Per-metre growth of the (s, d, psi) standard deviations.
    pub noise_range_slope: [f64; 3],
}

impl Default for PemParams {
    fn default() -> Self {
        PemParams {
            detect_coeffs: [4.5, -0.05, -2.5],
            noise_base: [0.3, 0.05, 0.02],
            noise_range_slope: [0.01, 0.002, 0.0005],
        }
    }
}

impl PemParams {
    /// Detections always succeed and offsets vanish.
    pub fn perfect() -> Self {
        PemParams { detect_coeffs: [1e9, 0.0, 0.0], noise_base: [0.0; 3], noise_range_slope: [0.0; 3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// White-noise acceleration density along s and d.
    pub process_accel: [f64; 2],
    /// Initial position and velocity standard deviations.
    pub init_pos_sd: f64,
    pub init_vel_sd: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { process_accel: [1.0, 0.2], init_pos_sd: 0.3, init_vel_sd: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub progress: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub turn_rate: f64,
    pub jerk: f64,
    pub heading: f64,
    pub lane_offset: f64,
    pub potential: f64,
    /// Penalty for changing the target lane.
    pub lane_switch: f64,
    /// Squared shortfall of the following distance to a leader.
    pub following: f64,
    /// Squared speed excess when passing a vehicle on its right.
    pub undertake: f64,
    /// Squared lateral distance to the goal lane at the end of the lookahead.
    pub destination: f64,
}

impl CostWeights {
    pub fn as_array(&self) -> [f64; 12] {
        [
            self.progress,
            self.velocity,
            self.acceleration,
            self.turn_rate,
            self.jerk,
            self.heading,
            self.lane_offset,
            self.potential,
            self.lane_switch,
            self.following,
            self.undertake,
            self.destination,
        ]
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            progress: 0.5,
            velocity: 0.1,
            acceleration: 0.05,
            turn_rate: 1.0,
            jerk: 0.0005,
            heading: 2.0,
            lane_offset: 0.2,
            potential: 5.0,
            lane_switch: 300.0,
            following: 2.0,
            undertake: 50.0,
            destination: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Lookahead in steps.
    pub horizon: usize,
    pub v_goal: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub accelerations: Vec<f64>,
    pub max_turn_rate: f64,
    pub max_heading: f64,
    /// Lateral gain: desired heading per metre of lateral error at unit speed.
    pub lateral_gain: f64,
    pub heading_gain: f64,
    /// Extra clearance around predicted obstacles (s, d).
    pub safety_margin: [f64; 2],
    /// Obstacles predicted faster than this are vehicles the ego should not
    /// pass on the right.
    pub moving_speed: f64,
    /// Speed excess allowed when passing such a vehicle on the right.
    pub pass_dv: f64,
    /// Distance ahead of alongside from which `pass_dv` already applies (m).
    pub pass_lookahead: f64,
    /// Lane the destination lies in.
    pub goal_lane: usize,
    /// Reaction time and braking deceleration of the following distance.
    pub following: [f64; 2],
    /// Length scales of the obstacle potential field (s, d).
    pub potential_scale: [f64; 2],
    pub weights: CostWeights,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            horizon: 30,
            v_goal: 30.0,
            a_min: -10.0,
            a_max: 3.0,
            accelerations: vec![-10.0, -8.0, -6.0, -4.0, -2.5, -1.0, 0.0, 1.0, 2.0, 3.0],
            max_turn_rate: 0.8,
            max_heading: 0.25,
            lateral_gain: 1.5,
            heading_gain: 4.0,
            safety_margin: [1.0, 0.3],
            moving_speed: 1.0,
            pass_dv: 4.8,
            pass_lookahead: 50.0,
            goal_lane: 2,
            following: [0.3, 10.0],
            potential_scale: [8.0, 1.5],
            weights: CostWeights::default(),
        }
    }
}

/// Constants of the traffic-rule predicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConstants {
    /// Reaction time for the safe distance (s).
    pub t_react: f64,
    /// Braking deceleration magnitude assumed for the safe distance.
    pub a_brake: f64,
    /// Accelerations below this count as braking.
    pub a_braking_threshold: f64,
    /// Range within which a vehicle counts as leading.
    pub d_lead: f64,
    /// Leaders slower than this are slow.
    pub v_slow: f64,
    pub v_flow_min: f64,
    pub dv_max: f64,
    pub v_queue: f64,
    /// Longitudinal radius of "near" for slow traffic.
    pub d_near: f64,
    /// Grace period after a cut-in (s).
    pub t_cut: f64,
    /// Minimum lateral speed towards the ego lane for a cut-in.
    pub cut_in_speed: f64,
}

impl Default for RuleConstants {
    fn default() -> Self {
        RuleConstants {
            t_react: 0.3,
            a_brake: 10.0,
            a_braking_threshold: -2.0,
            d_lead: 50.0,
            v_slow: 13.6,
            v_flow_min: 13.6,
            dv_max: 5.5,
            v_queue: 8.3,
            d_near: 30.0,
            t_cut: 3.0,
            cut_in_speed: 0.2,
        }
    }
}
