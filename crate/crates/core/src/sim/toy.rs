//! Scalar Gaussian random walk with a known failure probability.

use serde::{Deserialize, Serialize};

use super::{Sampler, Scenario, Simulator};
use crate::stl::{Formula, Interval, PredicateTable};

/// Barrier for which `P(max_{t ≤ 40} x_t > c) ≈ 1e-4` at unit noise.
pub const DEFAULT_BARRIER: f64 = 24.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyWalk {
    pub drift: f64,
    pub sigma: f64,
    pub horizon: usize,
    pub barrier: f64,
}

impl Default for ToyWalk {
    fn default() -> Self {
        ToyWalk { drift: 0.0, sigma: 1.0, horizon: 40, barrier: DEFAULT_BARRIER }
    }
}

impl ToyWalk {
    pub fn new(drift: f64, sigma: f64, horizon: usize) -> Self {
        assert!(sigma >= 0.0, "sigma must be non-negative");
        ToyWalk { drift, sigma, horizon, ..ToyWalk::default() }
    }

    pub fn with_barrier(mut self, barrier: f64) -> Self {
        self.barrier = barrier;
        self
    }

    /// `G[0,inf] level(barrier)`: the walk never exceeds the barrier.
    pub fn formula(&self) -> Formula {
        Formula::always(Interval::unbounded(0), Formula::pred_with("level", vec![self.barrier]))
    }

    /// `G[0,inf] floor(barrier)`: the walk never drops below `-barrier`.
    pub fn floor_formula(&self) -> Formula {
        Formula::always(Interval::unbounded(0), Formula::pred_with("floor", vec![self.barrier]))
    }
}

#[derive(Clone, Debug)]
pub struct ToyWalkSim {
    x: [f64; 1],
    t: usize,
    drift: f64,
    sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToySnapshot {
    pub x: f64,
    pub t: usize,
}

impl Simulator for ToyWalkSim {
    type Snapshot = ToySnapshot;

    fn state(&self) -> &[f64] {
        &self.x
    }

    fn timestep(&self) -> usize {
        self.t
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn step(&mut self, sampler: &mut Sampler) -> Vec<f64> {
        let inc = self.drift + sampler.perturb(self.sigma);
        self.x[0] += inc;
        self.t += 1;
        vec![inc]
    }

    fn snapshot(&self) -> ToySnapshot {
        ToySnapshot { x: self.x[0], t: self.t }
    }

    fn restore(&mut self, s: &ToySnapshot) {
        self.x = [s.x];
        self.t = s.t;
    }
}

impl Scenario for ToyWalk {
    type Sim = ToyWalkSim;

    fn build(&self) -> ToyWalkSim {
        ToyWalkSim { x: [0.0], t: 0, drift: self.drift, sigma: self.sigma }
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn dt(&self) -> f64 {
        1.0
    }

    /// `level(c)` has margin `c - x`, `floor(c)` has margin `x + c`.
    fn predicates(&self) -> PredicateTable {
        let mut table = PredicateTable::new();
        table
            .insert_with_args("level", 1, |x, a| a[0] - x[0])
            .insert_with_args("floor", 1, |x, a| x[0] + a[0]);
        table
    }
}
