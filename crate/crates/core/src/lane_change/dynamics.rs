use serde::{Deserialize, Serialize};

use super::config::{EgoConfig, ObstacleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub s: f64,
    pub d: f64,
    pub psi: f64,
    pub v: f64,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    /// Lane index from the lateral position, `None` off the road.
    pub fn lane(&self, lane_width: f64, lanes: usize) -> Option<usize> {
        lane_of(self.d, lane_width, lanes)
    }

    pub fn v_long(&self) -> f64 {
        self.v * self.psi.cos()
    }

    pub fn v_lat(&self) -> f64 {
        self.v * self.psi.sin()
    }
}

pub fn lane_of(d: f64, lane_width: f64, lanes: usize) -> Option<usize> {
    let k = (d / lane_width).floor();
    (k >= 0.0 && (k as usize) < lanes).then_some(k as usize)
}

/// Lane index clamped onto the road.
pub fn nearest_lane(d: f64, lane_width: f64, lanes: usize) -> usize {
    ((d / lane_width).floor().max(0.0) as usize).min(lanes - 1)
}

/// Margin of "both footprints overlap a common lane": the largest, over
/// lanes, of the smaller of the two overlaps with that lane.
pub fn shared_lane(a: (f64, f64), b: (f64, f64), lane_width: f64, lanes: usize) -> f64 {
    let occ = |(d, w): (f64, f64), k: f64| (d + w / 2.0).min((k + 1.0) * lane_width) - (d - w / 2.0).max(k * lane_width);
    (0..lanes).map(|k| occ(a, k as f64).min(occ(b, k as f64))).fold(f64::NEG_INFINITY, f64::max)
}

/// Kinematic single-track step for action `(acceleration, turn rate)`.
///
/// The turn rate is mapped to a steering angle through the wheelbase and
/// clamped to `max_steer`; position integrates the pre-step speed and
/// heading.
pub fn dyn_step(x: &VehicleState, action: [f64; 2], dt: f64, ego: &EgoConfig) -> VehicleState {
    let [a, omega] = action;
    let l = ego.wheelbase;
    let yaw_rate = if x.v > 1e-9 {
        let delta = (omega * l / x.v).atan().clamp(-ego.max_steer, ego.max_steer);
        x.v / l * delta.tan()
    } else {
        0.0
    };
    VehicleState {
        s: x.s + x.v * x.psi.cos() * dt,
        d: x.d + x.v * x.psi.sin() * dt,
        psi: x.psi + yaw_rate * dt,
        v: (x.v + a * dt).clamp(0.0, ego.v_max),
        length: x.length,
        width: x.width,
    }
}

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

/// Ground-truth state of a scripted obstacle at time `time` (s).
pub fn scripted_state(o: &ObstacleConfig, lane_width: f64, time: f64) -> VehicleState {
    let center = |k: usize| (k as f64 + 0.5) * lane_width;
    let (d, vd) = match o.maneuver {
        None => (center(o.lane), 0.0),
        Some(m) => {
            let from = center(o.lane);
            let to = center(m.target_lane);
            let u = ((time - m.start) / m.duration).clamp(0.0, 1.0);
            let rate = if u > 0.0 && u < 1.0 { 6.0 * u * (1.0 - u) / m.duration } else { 0.0 };
            (from + (to - from) * smoothstep(u), (to - from) * rate)
        }
    };
    VehicleState {
        s: o.s + o.v * time,
        d,
        psi: vd.atan2(o.v),
        v: o.v.hypot(vd),
        length: o.length,
        width: o.width,
    }
}
