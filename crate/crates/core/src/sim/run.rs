use std::sync::Arc;

use super::{
    DrawLog, NoiseStream, ProposalParams, Sampler, Scenario, SimError, Simulator, SimulatorSnapshot,
    Trajectory,
};
use crate::monitor::{BoundFormula, WorkList};

type SnapOf<S> = <<S as Scenario>::Sim as Simulator>::Snapshot;

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Take a snapshot every `snapshot_stride` steps (and always at `t = 0`
    /// and at every splice point).
    pub snapshot_stride: usize,
    /// Keep the [`DrawLog`] of the run.
    pub record_draws: bool,
    /// Use a pruned work-list.
    pub prune: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { snapshot_stride: 1, record_draws: false, prune: false }
    }
}

/// Simulator snapshot plus the noise position needed to continue from it.
#[derive(Clone, Debug)]
pub struct Checkpoint<S> {
    pub snapshot: SimulatorSnapshot<S>,
    pub stream_id: u64,
    pub counter: u128,
    pub log_weight: f64,
}

impl<S> Checkpoint<S> {
    pub fn t(&self) -> usize {
        self.snapshot.t
    }
}

/// A monitored run: the trajectory, its prefix robustness after every
/// step, and the checkpoints that make it resumable.
#[derive(Clone, Debug)]
pub struct RunRecord<S> {
    pub trajectory: Trajectory,
    /// `levels[t]` is the robustness of `τ[0:t]` at index 0.
    pub levels: Vec<f64>,
    pub checkpoints: Vec<Checkpoint<S>>,
    pub master_seed: u64,
    pub proposal: ProposalParams,
    /// Log likelihood ratio of the whole run under the proposal.
    pub log_weight: f64,
    pub draws: Option<DrawLog>,
    /// Simulator steps executed to produce this record (excluding the
    /// copied prefix of a resume).
    pub steps_simulated: usize,
}

impl<S> RunRecord<S> {
    pub fn final_level(&self) -> f64 {
        *self.levels.last().expect("at least one level")
    }

    /// First timestep whose prefix robustness is strictly below `gamma`.
    pub fn first_below(&self, gamma: f64) -> Option<usize> {
        self.levels.iter().position(|&l| l < gamma)
    }
}

fn checked_state(state: &[f64], t: usize) -> Result<Vec<f64>, SimError> {
    if let Some(index) = state.iter().position(|x| !x.is_finite()) {
        return Err(SimError::NonFiniteState { t, index });
    }
    Ok(state.to_vec())
}

fn checkpoint<M: Simulator>(sim: &M, sampler: &Sampler) -> Checkpoint<M::Snapshot> {
    Checkpoint {
        snapshot: SimulatorSnapshot::capture(sim),
        stream_id: sampler.stream().stream_id(),
        counter: sampler.stream().counter(),
        log_weight: sampler.log_weight(),
    }
}

/// Steps `sim` to `horizon`, feeding each state to `wl` and appending to `rec`.
fn advance<M: Simulator>(
    sim: &mut M,
    sampler: &mut Sampler,
    wl: &mut WorkList,
    rec: &mut RunRecord<M::Snapshot>,
    horizon: usize,
    stride: usize,
) -> Result<(), SimError> {
    while sim.timestep() < horizon {
        let action = sim.step(sampler);
        let t = sim.timestep();
        let x = checked_state(sim.state(), t)?;
        wl.update(&x)?;
        rec.levels.push(wl.robustness()?);
        rec.trajectory.push(action, x);
        rec.steps_simulated += 1;
        if t.is_multiple_of(stride) {
            rec.checkpoints.push(checkpoint(sim, sampler));
        }
    }
    Ok(())
}

/// Runs a fresh simulator of `scenario` for its full horizon, monitoring
/// `spec` after every step.
pub fn run_trajectory<S: Scenario>(
    scenario: &S,
    spec: &Arc<BoundFormula>,
    mut sampler: Sampler,
    opts: RunOptions,
) -> Result<RunRecord<SnapOf<S>>, SimError> {
    let horizon = scenario.horizon();
    let stride = opts.snapshot_stride.max(1);
    if opts.record_draws && sampler.draw_log().is_none() {
        sampler = sampler.recording();
    }
    let mut sim = scenario.build();
    let mut wl = WorkList::new(Arc::clone(spec)).with_final_step(horizon);
    if opts.prune {
        wl = wl.pruned();
    }
    let x0 = checked_state(sim.state(), 0)?;
    wl.update(&x0)?;
    let mut rec = RunRecord {
        trajectory: Trajectory::new(scenario.dt(), x0, sim.action_dim(), sampler.stream().stream_id()),
        levels: vec![wl.robustness()?],
        checkpoints: vec![checkpoint(&sim, &sampler)],
        master_seed: sampler.stream().master_seed(),
        proposal: ProposalParams::target(),
        log_weight: 0.0,
        draws: None,
        steps_simulated: 0,
    };
    advance(&mut sim, &mut sampler, &mut wl, &mut rec, horizon, stride)?;
    rec.proposal = *sampler.proposal();
    rec.log_weight = sampler.log_weight();
    rec.draws = sampler.take_draw_log();
    Ok(rec)
}

/// Continues `source` from `t_splice` with the fresh `sampler`.
///
/// States, actions and levels on `[0, t_splice]` are copied from the source;
/// the simulator is restored from the nearest checkpoint at or before
/// `t_splice`, replaying forward with the source's own noise if needed.
pub fn resume_trajectory<S: Scenario>(
    scenario: &S,
    spec: &Arc<BoundFormula>,
    source: &RunRecord<SnapOf<S>>,
    t_splice: usize,
    mut sampler: Sampler,
    opts: RunOptions,
) -> Result<RunRecord<SnapOf<S>>, SimError> {
    let horizon = scenario.horizon();
    let last = source.trajectory.last_step();
    if t_splice > last {
        return Err(SimError::SpliceOutOfRange { t: t_splice, last });
    }
    let idx = source.checkpoints.partition_point(|c| c.t() <= t_splice);
    let cp = idx.checked_sub(1).map(|i| &source.checkpoints[i]).ok_or(SimError::SpliceMismatch { t: 0 })?;
    if !cp.snapshot.matches(&source.trajectory.states()[cp.t()]) {
        return Err(SimError::SpliceMismatch { t: cp.t() });
    }
    let mut sim = scenario.build();
    sim.restore(&cp.snapshot.inner);
    let mut replayed = 0;
    let mut log_weight = cp.log_weight;
    if cp.t() < t_splice {
        let stream = NoiseStream::at(source.master_seed, cp.stream_id, cp.counter);
        let mut own = Sampler::with_proposal(stream, source.proposal).with_log_weight(cp.log_weight);
        while sim.timestep() < t_splice {
            sim.step(&mut own);
            replayed += 1;
        }
        if sim.state() != &source.trajectory.states()[t_splice][..] {
            return Err(SimError::SpliceMismatch { t: t_splice });
        }
        log_weight = own.log_weight();
    }

    let mut trajectory = source.trajectory.prefix(t_splice);
    trajectory.seed_lineage.push((t_splice, sampler.stream().stream_id()));
    let mut wl = WorkList::replay(Arc::clone(spec), trajectory.states(), opts.prune)?.with_final_step(horizon);
    if wl.robustness()?.to_bits() != source.levels[t_splice].to_bits() {
        return Err(SimError::SpliceMismatch { t: t_splice });
    }
    sampler = sampler.with_log_weight(log_weight);
    let mut checkpoints: Vec<_> = source.checkpoints[..idx].iter().filter(|c| c.t() < t_splice).cloned().collect();
    checkpoints.push(checkpoint(&sim, &sampler));
    let mut rec = RunRecord {
        trajectory,
        levels: source.levels[..=t_splice].to_vec(),
        checkpoints,
        master_seed: sampler.stream().master_seed(),
        proposal: *sampler.proposal(),
        log_weight,
        draws: None,
        steps_simulated: replayed,
    };
    advance(&mut sim, &mut sampler, &mut wl, &mut rec, horizon, opts.snapshot_stride.max(1))?;
    rec.log_weight = sampler.log_weight();
    Ok(rec)
}

/// Records every stream id handed to a trajectory continuation and panics on
/// reuse. Only active in debug builds.
#[derive(Debug, Default)]
pub struct StreamRegistry {
    #[cfg(debug_assertions)]
    used: std::sync::Mutex<std::collections::HashSet<u64>>,
}

impl StreamRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    #[cfg(debug_assertions)]
    pub fn claim(&self, stream_id: u64) {
        let fresh = self.used.lock().expect("registry lock").insert(stream_id);
        assert!(fresh, "noise stream {stream_id} consumed twice");
    }

    #[cfg(not(debug_assertions))]
    #[inline]
    pub fn claim(&self, _stream_id: u64) {}
}
