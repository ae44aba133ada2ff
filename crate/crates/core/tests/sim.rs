mod common;

use std::sync::Arc;

use stl_splitter::monitor::BoundFormula;
use stl_splitter::sim::toy::{ToySnapshot, ToyWalk};
use stl_splitter::sim::{
    resume_trajectory, run_trajectory, NoiseStream, RunOptions, Sampler, Scenario, SimError, Simulator,
    SimulatorSnapshot,
};

fn spec(walk: &ToyWalk) -> Arc<BoundFormula> {
    BoundFormula::new(walk.formula(), &walk.predicates()).unwrap()
}

fn sampler(seed: u64, stream: u64) -> Sampler {
    Sampler::target(NoiseStream::new(seed, stream))
}

#[test]
fn zero_noise_walk_is_a_straight_line() {
    let walk = ToyWalk::new(1.0, 0.0, 10).with_barrier(5.0);
    let rec = run_trajectory(&walk, &spec(&walk), sampler(0, 0), RunOptions::default()).unwrap();
    assert_eq!(rec.trajectory.len(), 11);
    for (t, x) in rec.trajectory.states().iter().enumerate() {
        assert_eq!(x[0], t as f64);
    }
    // running minimum of 5 - t, clipped at the first violation
    let expected: Vec<f64> = (0..=10).map(|t| 5.0 - t as f64).collect();
    assert_eq!(rec.levels, expected);
    assert_eq!(rec.levels[5], 0.0);
    assert_eq!(rec.first_below(0.0), Some(6));
}

#[test]
fn same_stream_same_trajectory() {
    let walk = ToyWalk::default();
    let s = spec(&walk);
    let a = run_trajectory(&walk, &s, sampler(3, 9), RunOptions::default()).unwrap();
    let b = run_trajectory(&walk, &s, sampler(3, 9), RunOptions::default()).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.levels, b.levels);
    let c = run_trajectory(&walk, &s, sampler(3, 10), RunOptions::default()).unwrap();
    assert_ne!(a.trajectory.states(), c.trajectory.states());
}

#[test]
fn resume_with_own_stream_reproduces_source() {
    let walk = ToyWalk::default();
    let s = spec(&walk);
    let src = run_trajectory(&walk, &s, sampler(5, 1), RunOptions::default()).unwrap();
    for t in [0, 7, 23, 40] {
        let cp = &src.checkpoints[t];
        let own = Sampler::target(NoiseStream::at(5, cp.stream_id, cp.counter));
        let again = resume_trajectory(&walk, &s, &src, t, own, RunOptions::default()).unwrap();
        assert_eq!(again.trajectory.states(), src.trajectory.states());
        assert_eq!(again.levels, src.levels);
        assert_eq!(again.steps_simulated, 40 - t);
    }
}

#[test]
fn resume_keeps_prefix_bitwise() {
    let walk = ToyWalk::default();
    let s = spec(&walk);
    let src = run_trajectory(&walk, &s, sampler(5, 1), RunOptions::default()).unwrap();
    let out = resume_trajectory(&walk, &s, &src, 12, sampler(5, 77), RunOptions::default()).unwrap();
    assert_eq!(out.trajectory.len(), 41);
    for t in 0..=12 {
        assert_eq!(out.trajectory.states()[t][0].to_bits(), src.trajectory.states()[t][0].to_bits());
        assert_eq!(out.levels[t].to_bits(), src.levels[t].to_bits());
    }
    assert_ne!(out.trajectory.states()[13], src.trajectory.states()[13]);
    assert_eq!(out.trajectory.seed_lineage, vec![(0, 1), (12, 77)]);
}

#[test]
fn resume_at_horizon_returns_prefix() {
    let walk = ToyWalk::default();
    let s = spec(&walk);
    let src = run_trajectory(&walk, &s, sampler(2, 0), RunOptions::default()).unwrap();
    let out = resume_trajectory(&walk, &s, &src, 40, sampler(2, 1), RunOptions::default()).unwrap();
    assert_eq!(out.trajectory.states(), src.trajectory.states());
    assert_eq!(out.levels, src.levels);
    assert_eq!(out.steps_simulated, 0);
}

#[test]
fn strided_snapshots_replay_forward() {
    let walk = ToyWalk::default();
    let s = spec(&walk);
    let opts = RunOptions { snapshot_stride: 8, ..RunOptions::default() };
    let src = run_trajectory(&walk, &s, sampler(4, 2), opts).unwrap();
    assert_eq!(src.checkpoints.iter().map(|c| c.t()).collect::<Vec<_>>(), vec![0, 8, 16, 24, 32, 40]);
    let out = resume_trajectory(&walk, &s, &src, 13, sampler(4, 3), opts).unwrap();
    assert_eq!(&out.trajectory.states()[..=13], &src.trajectory.states()[..=13]);
    assert_eq!(out.steps_simulated, 5 + 27);
    // a second splice before the first one's checkpoint still lines up
    let again = resume_trajectory(&walk, &s, &out, 20, sampler(4, 4), opts).unwrap();
    assert_eq!(&again.trajectory.states()[..=20], &out.trajectory.states()[..=20]);
    assert_eq!(again.trajectory.seed_lineage, vec![(0, 2), (13, 3), (20, 4)]);
}

#[test]
fn splice_out_of_range_and_mismatch() {
    let walk = ToyWalk::default();
    let s = spec(&walk);
    let src = run_trajectory(&walk, &s, sampler(2, 0), RunOptions::default()).unwrap();
    assert!(matches!(
        resume_trajectory(&walk, &s, &src, 41, sampler(2, 1), RunOptions::default()),
        Err(SimError::SpliceOutOfRange { .. })
    ));
    let mut bad = src.clone();
    bad.checkpoints[10].snapshot.inner.x += 1.0;
    bad.checkpoints[10].snapshot.state_checksum ^= 1;
    assert!(matches!(
        resume_trajectory(&walk, &s, &bad, 10, sampler(2, 1), RunOptions::default()),
        Err(SimError::SpliceMismatch { t: 10 })
    ));
}

#[test]
fn snapshot_encoding_is_versioned() {
    let walk = ToyWalk::default();
    let mut sim = walk.build();
    let mut smp = sampler(1, 1);
    sim.step(&mut smp);
    let snap = SimulatorSnapshot::capture(&sim);
    let bytes = snap.encode();
    let back = SimulatorSnapshot::<ToySnapshot>::decode(&bytes).unwrap();
    assert_eq!(back.inner, snap.inner);
    assert!(back.matches(sim.state()));
    let tampered = String::from_utf8(bytes).unwrap().replace("\"version\":1", "\"version\":9");
    assert!(matches!(
        SimulatorSnapshot::<ToySnapshot>::decode(tampered.as_bytes()),
        Err(SimError::SnapshotVersion { found: 9, .. })
    ));
}

#[test]
fn resume_at_zero_matches_fresh_runs_in_distribution() {
    let walk = ToyWalk::new(0.0, 1.0, 40);
    let s = spec(&walk);
    let n = 10_000;
    let src = run_trajectory(&walk, &s, sampler(11, 0), RunOptions::default()).unwrap();
    let fresh: Vec<f64> = (0..n)
        .map(|i| {
            let r = run_trajectory(&walk, &s, sampler(11, 1 + i), RunOptions::default()).unwrap();
            r.trajectory.states()[40][0]
        })
        .collect();
    let resumed: Vec<f64> = (0..n)
        .map(|i| {
            let r = resume_trajectory(&walk, &s, &src, 0, sampler(11, 1_000_000 + i), RunOptions::default())
                .unwrap();
            r.trajectory.states()[40][0]
        })
        .collect();
    let p = common::ks_two_sample_p(&fresh, &resumed);
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn non_finite_state_aborts() {
    let walk = ToyWalk::new(f64::INFINITY, 0.0, 3);
    let s = spec(&walk);
    let err = run_trajectory(&walk, &s, sampler(0, 0), RunOptions::default()).unwrap_err();
    assert!(matches!(err, SimError::NonFiniteState { t: 1, index: 0 }));
}
