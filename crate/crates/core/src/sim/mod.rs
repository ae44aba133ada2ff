//! Simulator contract, trajectory storage and the monitored run loop.

pub mod noise;
mod run;
pub mod toy;
mod trajectory;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monitor::MonitorError;
use crate::stl::PredicateTable;

pub use noise::{DrawLog, NoiseStream, ProposalParams, Sampler, SELECTION_STREAM};
pub use run::{resume_trajectory, run_trajectory, Checkpoint, RunOptions, RunRecord, StreamRegistry};
pub use trajectory::{read_states_csv, Trajectory, TrajectoryError};

/// Version tag written into every serialized snapshot.
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite state component {index} at timestep {t}")]
    NonFiniteState { t: usize, index: usize },
    #[error("snapshot does not match trajectory at timestep {t}")]
    SpliceMismatch { t: usize },
    #[error("splice timestep {t} beyond trajectory end {last}")]
    SpliceOutOfRange { t: usize, last: usize },
    #[error("snapshot version {found}, expected {expected}")]
    SnapshotVersion { found: u32, expected: u32 },
    #[error("snapshot decode: {0}")]
    SnapshotDecode(#[from] serde_json::Error),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

/// One closed-loop system: perception, control and dynamics behind a
/// single `step`.
pub trait Simulator: Send {
    type Snapshot: Clone + Send + Sync + Serialize + DeserializeOwned;

    /// Current combined state `x_t`.
    fn state(&self) -> &[f64];

    fn timestep(&self) -> usize;

    fn action_dim(&self) -> usize;

    /// Chooses `a_t` from the current state, applies it and advances to
    /// `t + 1`. Returns `a_t`.
    fn step(&mut self, sampler: &mut Sampler) -> Vec<f64>;

    fn snapshot(&self) -> Self::Snapshot;

    fn restore(&mut self, snapshot: &Self::Snapshot);
}

/// Factory for fresh simulators plus the predicates over their state.
pub trait Scenario: Send + Sync {
    type Sim: Simulator;

    fn build(&self) -> Self::Sim;

    /// Number of steps `T`; trajectories hold `T + 1` states.
    fn horizon(&self) -> usize;

    /// Seconds per step.
    fn dt(&self) -> f64;

    fn predicates(&self) -> PredicateTable;
}

/// A simulator snapshot tagged with its version and a checksum of the
/// combined state it was taken at.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulatorSnapshot<S> {
    pub version: u32,
    pub t: usize,
    pub state_checksum: u64,
    pub inner: S,
}

impl<S: Serialize + DeserializeOwned> SimulatorSnapshot<S> {
    pub fn capture<M: Simulator<Snapshot = S>>(sim: &M) -> Self {
        SimulatorSnapshot {
            version: SNAPSHOT_VERSION,
            t: sim.timestep(),
            state_checksum: state_checksum(sim.state()),
            inner: sim.snapshot(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("snapshot serialization")
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, SimError> {
        let snap: Self = serde_json::from_slice(bytes)?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(SimError::SnapshotVersion { found: snap.version, expected: SNAPSHOT_VERSION });
        }
        Ok(snap)
    }

    pub fn matches(&self, state: &[f64]) -> bool {
        self.state_checksum == state_checksum(state)
    }
}

/// FNV-1a over the bit patterns of `state`.
pub fn state_checksum(state: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in state {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
