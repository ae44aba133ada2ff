use std::sync::Arc;

use super::{par_map, Diagnostics, Estimate, EstimatorError, Method, Stopwatch};
use crate::monitor::BoundFormula;
use crate::sim::{run_trajectory, NoiseStream, RunOptions, Sampler, Scenario};

/// Runs `n` independent trajectories on streams `0..n` and reports the
/// fraction whose final robustness is negative.
pub fn mc_estimate<S: Scenario>(
    scenario: &S,
    spec: &Arc<BoundFormula>,
    n: usize,
    seed: u64,
) -> Result<Estimate, EstimatorError> {
    if n == 0 {
        return Err(EstimatorError::Params("N must be at least 1".into()));
    }
    let clock = Stopwatch::start();
    let runs = par_map(n, |i| {
        let sampler = Sampler::target(NoiseStream::new(seed, i as u64));
        run_trajectory(scenario, spec, sampler, RunOptions::default()).map(|r| (r.final_level(), r.steps_simulated))
    });
    let mut failures = 0;
    let mut steps = 0u64;
    for r in runs {
        let (level, s) = r?;
        failures += usize::from(level < 0.0);
        steps += s as u64;
    }
    let p = failures as f64 / n as f64;
    Ok(Estimate {
        p_hat: p,
        method: Method::Mc,
        levels: Vec::new(),
        discards_per_stage: Vec::new(),
        total_simulation_steps: steps,
        trajectories_run: n as u64,
        extinction: false,
        master_seed: seed,
        wall_time_s: clock.seconds(),
        diagnostics: Diagnostics {
            std_error: Some((p * (1.0 - p) / n as f64).sqrt()),
            ess: None,
            degenerate: false,
            failures,
        },
    })
}
