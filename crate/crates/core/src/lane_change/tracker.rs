use serde::{Deserialize, Serialize};

use super::config::TrackerConfig;
use super::dynamics::VehicleState;
use super::perception::Observation;

type Mat4 = [[f64; 4]; 4];

/// Constant-velocity Kalman estimate of one obstacle, state `[s, d, vs, vd]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub mean: [f64; 4],
    pub cov: Mat4,
    /// Steps since the last detection.
    pub staleness: usize,
}

fn transition(dt: f64) -> Mat4 {
    [[1.0, 0.0, dt, 0.0], [0.0, 1.0, 0.0, dt], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
}

fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

fn transpose(a: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

impl Track {
    /// Track centred on the true state.
    pub fn from_truth(o: &VehicleState, cfg: &TrackerConfig) -> Self {
        let p = cfg.init_pos_sd.powi(2);
        let v = cfg.init_vel_sd.powi(2);
        let mut cov = [[0.0; 4]; 4];
        cov[0][0] = p;
        cov[1][1] = p;
        cov[2][2] = v;
        cov[3][3] = v;
        Track { mean: [o.s, o.d, o.v_long(), o.v_lat()], cov, staleness: 0 }
    }

    pub fn predict(&mut self, dt: f64, cfg: &TrackerConfig) {
        let f = transition(dt);
        let m = self.mean;
        self.mean = [m[0] + dt * m[2], m[1] + dt * m[3], m[2], m[3]];
        let mut p = mul(&mul(&f, &self.cov), &transpose(&f));
        // discretised white-noise acceleration
        for (axis, q) in cfg.process_accel.iter().enumerate() {
            let (pos, vel) = (axis, axis + 2);
            p[pos][pos] += q * dt.powi(3) / 3.0;
            p[pos][vel] += q * dt.powi(2) / 2.0;
            p[vel][pos] += q * dt.powi(2) / 2.0;
            p[vel][vel] += q * dt;
        }
        self.cov = p;
    }

    /// Position update with measurement standard deviations `sd = (σ_s, σ_d)`.
    pub fn update(&mut self, obs: &Observation, sd: [f64; 2]) {
        let p = self.cov;
        // S = H P H' + R with H selecting (s, d)
        let s = [[p[0][0] + sd[0] * sd[0] + 1e-12, p[0][1]], [p[1][0], p[1][1] + sd[1] * sd[1] + 1e-12]];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        // K = P H' S^-1  (4x2)
        let k: [[f64; 2]; 4] =
            std::array::from_fn(|i| std::array::from_fn(|j| p[i][0] * inv[0][j] + p[i][1] * inv[1][j]));
        let innov = [obs.s - self.mean[0], obs.d - self.mean[1]];
        for (i, row) in k.iter().enumerate() {
            self.mean[i] += row[0] * innov[0] + row[1] * innov[1];
        }
        // P = (I - K H) P
        let mut next = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                next[i][j] = p[i][j] - k[i][0] * p[0][j] - k[i][1] * p[1][j];
            }
        }
        // keep it symmetric
        for i in 0..4 {
            for j in 0..i {
                let v = 0.5 * (next[i][j] + next[j][i]);
                next[i][j] = v;
                next[j][i] = v;
            }
        }
        self.cov = next;
        self.staleness = 0;
    }

    /// Mean position `steps` steps ahead under constant velocity.
    pub fn predict_position(&self, steps: usize, dt: f64) -> (f64, f64) {
        let h = steps as f64 * dt;
        (self.mean[0] + h * self.mean[2], self.mean[1] + h * self.mean[3])
    }
}

/// `x̂_{t+i|t}`: the mean after `i` constant-velocity steps.
pub fn predict(track: &Track, i: usize, dt: f64) -> [f64; 4] {
    let mut m = track.mean;
    for _ in 0..i {
        m = [m[0] + dt * m[2], m[1] + dt * m[3], m[2], m[3]];
    }
    m
}
