use super::config::{ControllerConfig, EgoConfig, RoadConfig};
use super::dynamics::{dyn_step, nearest_lane, shared_lane, VehicleState};

/// Predicted footprint of an obstacle over the lookahead: `path[k]` is the
/// centre at step `k + 1`.
#[derive(Clone, Debug)]
pub struct PredictedObstacle {
    pub path: Vec<(f64, f64)>,
    pub length: f64,
    pub width: f64,
}

impl PredictedObstacle {
    /// Longitudinal speed implied by the first two path points.
    pub fn speed(&self, dt: f64) -> f64 {
        match self.path.as_slice() {
            [a, b, ..] => (b.0 - a.0) / dt,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plan {
    pub action: [f64; 2],
    pub target_lane: usize,
    pub cost: f64,
}

/// Candidate evaluation result; `None` cost means infeasible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub acceleration: f64,
    pub target_lane: usize,
    pub first_turn_rate: f64,
    pub cost: Option<f64>,
}

pub struct Controller<'a> {
    pub cfg: &'a ControllerConfig,
    pub ego: &'a EgoConfig,
    pub road: &'a RoadConfig,
    pub dt: f64,
}

impl Controller<'_> {
    fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.road.lane_width
    }

    /// Turn rate steering towards the centre of `lane`.
    pub fn lateral_law(&self, x: &VehicleState, lane: usize) -> f64 {
        let c = self.cfg;
        let err = self.lane_center(lane) - x.d;
        let psi_des = (c.lateral_gain * err / x.v.max(1.0)).clamp(-c.max_heading, c.max_heading);
        (c.heading_gain * (psi_des - x.psi)).clamp(-c.max_turn_rate, c.max_turn_rate)
    }

    /// Lanes considered from the current target: itself and its neighbours.
    pub fn lane_options(&self, current_target: usize) -> Vec<usize> {
        let lo = current_target.saturating_sub(1);
        let hi = (current_target + 1).min(self.road.lanes - 1);
        (lo..=hi).collect()
    }

    /// Speed in excess of `pass_dv` over a moving vehicle to the left that is
    /// alongside or up to `pass_lookahead` ahead, scaled up from zero as the
    /// lateral offset grows to half a lane.
    fn undertake_excess(&self, x: &VehicleState, o: &PredictedObstacle, k: usize) -> f64 {
        let (os, od) = o.path[k];
        let v_o = o.speed(self.dt);
        let half = (x.length + o.length) / 2.0;
        let offset = ((od - x.d) / (self.road.lane_width / 2.0)).clamp(0.0, 1.0);
        if v_o > self.cfg.moving_speed && os - x.s > -half && os - x.s < half + self.cfg.pass_lookahead {
            offset * (x.v_long() - v_o - self.cfg.pass_dv).max(0.0)
        } else {
            0.0
        }
    }

    /// Rolls out holding `acceleration` and steering to `lane`.
    pub fn evaluate(
        &self,
        x0: &VehicleState,
        a_prev: f64,
        current_target: usize,
        acceleration: f64,
        lane: usize,
        obstacles: &[PredictedObstacle],
    ) -> Candidate {
        let c = self.cfg;
        let w = &c.weights;
        let width = self.road.lane_width;
        let d_lo = x0.width / 2.0;
        let d_hi = self.road.lanes as f64 * width - x0.width / 2.0;
        let first_turn_rate = self.lateral_law(x0, lane);
        let mut x = *x0;
        let mut cost = w.jerk * ((acceleration - a_prev) / self.dt).powi(2) + w.acceleration * acceleration.powi(2);
        if lane != current_target {
            cost += w.lane_switch;
        }
        let mut feasible = true;
        for k in 0..c.horizon {
            let omega = if k == 0 { first_turn_rate } else { self.lateral_law(&x, lane) };
            x = dyn_step(&x, [acceleration, omega], self.dt, self.ego);
            if x.d < d_lo || x.d > d_hi {
                feasible = false;
                break;
            }
            let centre = self.lane_center(nearest_lane(x.d, width, self.road.lanes));
            cost += w.velocity * (x.v - c.v_goal).powi(2)
                + w.turn_rate * omega * omega
                + w.heading * x.psi * x.psi
                + w.lane_offset * (x.d - centre).powi(2);
            for o in obstacles {
                let (os, od) = o.path[k];
                let ds = (x.s - os).abs();
                let dd = (x.d - od).abs();
                if ds < (x.length + o.length) / 2.0 + c.safety_margin[0]
                    && dd < (x.width + o.width) / 2.0 + c.safety_margin[1]
                {
                    feasible = false;
                    break;
                }
                cost += w.undertake * self.undertake_excess(&x, o, k).powi(2);
                if ds < 50.0 && os > x.s && shared_lane((x.d, x.width), (od, o.width), width, self.road.lanes) > 0.0 {
                    let gap = os - x.s - (x.length + o.length) / 2.0;
                    let v_o = o.speed(self.dt);
                    let need = x.v * c.following[0] + (x.v * x.v - v_o * v_o).max(0.0) / (2.0 * c.following[1]);
                    cost += w.following * (need - gap).max(0.0).powi(2);
                }
                cost += w.potential
                    * (-(ds / c.potential_scale[0]).powi(2) - (dd / c.potential_scale[1]).powi(2)).exp();
            }
            if !feasible {
                break;
            }
        }
        cost -= w.progress * (x.s - x0.s);
        cost += w.destination * (x.d - self.lane_center(c.goal_lane)).powi(2);
        Candidate {
            acceleration,
            target_lane: lane,
            first_turn_rate,
            cost: feasible.then_some(cost),
        }
    }

    /// Every candidate in enumeration order (lanes outer, accelerations inner).
    pub fn candidates(
        &self,
        x0: &VehicleState,
        a_prev: f64,
        current_target: usize,
        obstacles: &[PredictedObstacle],
    ) -> Vec<Candidate> {
        let mut out = Vec::new();
        for lane in self.lane_options(current_target) {
            for &a in &self.cfg.accelerations {
                out.push(self.evaluate(x0, a_prev, current_target, a, lane, obstacles));
            }
        }
        out
    }

    /// Minimum-cost feasible candidate, or full braking with zero turn rate.
    ///
    /// The acceleration of the winner is refined by a parabola through its
    /// cost and the costs of its feasible neighbours in the same lane, so the
    /// action varies smoothly with the predictions.
    pub fn plan(
        &self,
        x0: &VehicleState,
        a_prev: f64,
        current_target: usize,
        obstacles: &[PredictedObstacle],
    ) -> Plan {
        let cands = self.candidates(x0, a_prev, current_target, obstacles);
        let mut best: Option<usize> = None;
        for (i, cand) in cands.iter().enumerate() {
            if let Some(cost) = cand.cost {
                if best.is_none_or(|b| cost < cands[b].cost.expect("feasible")) {
                    best = Some(i);
                }
            }
        }
        let Some(i) = best else {
            return Plan { action: [self.cfg.a_min, 0.0], target_lane: current_target, cost: f64::INFINITY };
        };
        let b = cands[i];
        let per_lane = self.cfg.accelerations.len();
        let k = i % per_lane;
        let mut acceleration = b.acceleration;
        if k > 0 && k + 1 < per_lane {
            if let (Some(lo), Some(hi)) = (cands[i - 1].cost, cands[i + 1].cost) {
                acceleration = parabola_min(
                    (cands[i - 1].acceleration, lo),
                    (b.acceleration, b.cost.expect("feasible")),
                    (cands[i + 1].acceleration, hi),
                );
            }
        }
        Plan {
            action: [acceleration, b.first_turn_rate],
            target_lane: b.target_lane,
            cost: b.cost.expect("feasible"),
        }
    }
}

/// Vertex of the parabola through three points with `p1` the lowest,
/// clamped to `[p0.0, p2.0]`.
fn parabola_min(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den.abs() < 1e-12 {
        return x1;
    }
    (x1 - 0.5 * num / den).clamp(x0.min(x2), x0.max(x2))
}
