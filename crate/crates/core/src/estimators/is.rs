use std::sync::Arc;

use super::{par_map, weight, weighted_summary, Diagnostics, Estimate, EstimatorError, Method, Stopwatch};
use crate::monitor::BoundFormula;
use crate::sim::{run_trajectory, NoiseStream, ProposalParams, RunOptions, Sampler, Scenario};

/// Importance sampling under a fixed proposal. Uses the same streams as
/// [`super::mc_estimate`], so the target proposal reproduces it exactly.
pub fn is_fixed_estimate<S: Scenario>(
    scenario: &S,
    spec: &Arc<BoundFormula>,
    proposal: &ProposalParams,
    n: usize,
    seed: u64,
) -> Result<Estimate, EstimatorError> {
    if n == 0 {
        return Err(EstimatorError::Params("N must be at least 1".into()));
    }
    proposal.validate()?;
    let clock = Stopwatch::start();
    let runs = par_map(n, |i| {
        let sampler = Sampler::with_proposal(NoiseStream::new(seed, i as u64), *proposal);
        run_trajectory(scenario, spec, sampler, RunOptions::default())
            .map(|r| (r.final_level(), r.log_weight, r.steps_simulated))
    });
    let mut weights = Vec::with_capacity(n);
    let mut fails = Vec::with_capacity(n);
    let mut steps = 0u64;
    for r in runs {
        let (level, lw, s) = r?;
        weights.push(weight(lw));
        fails.push(level < 0.0);
        steps += s as u64;
    }
    let (p, se, ess) = weighted_summary(&weights, &fails);
    Ok(Estimate {
        p_hat: p.min(1.0),
        method: Method::Is,
        levels: Vec::new(),
        discards_per_stage: Vec::new(),
        total_simulation_steps: steps,
        trajectories_run: n as u64,
        extinction: false,
        master_seed: seed,
        wall_time_s: clock.seconds(),
        diagnostics: Diagnostics {
            std_error: Some(se),
            ess: Some(ess),
            degenerate: ess < 2.0,
            failures: fails.iter().filter(|&&f| f).count(),
        },
    })
}
