use std::sync::Arc;

use super::{par_map, Diagnostics, Estimate, EstimatorError, Method, Stopwatch};
use crate::monitor::BoundFormula;
use crate::sim::{
    resume_trajectory, run_trajectory, NoiseStream, RunOptions, Sampler, Scenario, StreamRegistry, SELECTION_STREAM,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmsParams {
    /// Population size.
    pub n: usize,
    /// Trajectories discarded per stage (more under ties).
    pub k: usize,
    /// Failure threshold on final robustness.
    pub gamma_final: f64,
    /// Safety cap on the number of splitting stages.
    pub max_stages: usize,
}

impl AmsParams {
    pub fn new(n: usize, k: usize) -> Self {
        AmsParams { n, k, gamma_final: 0.0, max_stages: 10_000 }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.k == 0 || self.k >= self.n {
            return Err(EstimatorError::Params(format!(
                "K must satisfy 1 <= K < N (got K={}, N={})",
                self.k, self.n
            )));
        }
        if !self.gamma_final.is_finite() {
            return Err(EstimatorError::Params("gamma_final must be finite".into()));
        }
        Ok(())
    }
}

impl Default for AmsParams {
    fn default() -> Self {
        AmsParams::new(250, 25)
    }
}

/// `Π_m (N - K_m)/N · failures/N`.
pub fn ams_probability(n: usize, discards: &[usize], final_failures: usize) -> f64 {
    let n_f = n as f64;
    let survival: f64 = discards.iter().map(|&k| (n - k) as f64 / n_f).product();
    survival * final_failures as f64 / n_f
}

/// Adaptive multilevel splitting.
///
/// Each stage sets `γ` to the `K`-th largest final robustness, discards every
/// trajectory at or above it, and refills each slot by cloning a uniformly
/// chosen survivor up to its first timestep below `γ` and re-simulating the
/// remainder on a fresh stream. Stops once `γ ≤ gamma_final`.
///
/// Initial runs use streams `0..N`, replacements the following ids in order
/// of creation, and survivor choice draws from [`SELECTION_STREAM`].
pub fn ams_estimate<S: Scenario>(
    scenario: &S,
    spec: &Arc<BoundFormula>,
    params: &AmsParams,
    seed: u64,
) -> Result<Estimate, EstimatorError> {
    params.validate()?;
    let AmsParams { n, k, gamma_final, max_stages } = *params;
    let clock = Stopwatch::start();
    let opts = RunOptions::default();
    let registry = StreamRegistry::new();
    let fresh = |stream: u64| {
        registry.claim(stream);
        Sampler::target(NoiseStream::new(seed, stream))
    };

    let mut pop = par_map(n, |i| run_trajectory(scenario, spec, fresh(i as u64), opts))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut steps: u64 = pop.iter().map(|r| r.steps_simulated as u64).sum();
    let mut trajectories = n as u64;
    let mut next_stream = n as u64;
    let mut selector = NoiseStream::new(seed, SELECTION_STREAM);

    let mut levels: Vec<f64> = Vec::new();
    let mut discards: Vec<usize> = Vec::new();
    let mut extinction = false;
    loop {
        let mut finals: Vec<f64> = pop.iter().map(|r| r.final_level()).collect();
        finals.sort_by(|a, b| b.total_cmp(a));
        let gamma = finals[k - 1];
        if gamma <= gamma_final {
            break;
        }
        if levels.last().is_some_and(|&prev| gamma >= prev) || levels.len() >= max_stages {
            extinction = true;
            break;
        }
        let (dropped, survivors): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| pop[i].final_level() >= gamma);
        if survivors.is_empty() {
            extinction = true;
            break;
        }
        let jobs: Vec<(usize, usize, usize, u64)> = dropped
            .iter()
            .map(|&slot| {
                let src = survivors[selector.index(survivors.len())];
                let t_split = pop[src].first_below(gamma).expect("survivor ends below gamma");
                let stream = next_stream;
                next_stream += 1;
                (slot, src, t_split, stream)
            })
            .collect();
        let pop_ref = &pop;
        let fresh_ref = &fresh;
        let refills = par_map(jobs.len(), |j| {
            let (_, src, t_split, stream) = jobs[j];
            resume_trajectory(scenario, spec, &pop_ref[src], t_split, fresh_ref(stream), opts)
        });
        for ((slot, ..), rec) in jobs.iter().zip(refills) {
            let rec = rec?;
            steps += rec.steps_simulated as u64;
            trajectories += 1;
            pop[*slot] = rec;
        }
        levels.push(gamma);
        discards.push(dropped.len());
    }

    let failures = pop.iter().filter(|r| r.final_level() < gamma_final).count();
    Ok(Estimate {
        p_hat: ams_probability(n, &discards, failures),
        method: Method::Ams,
        levels,
        discards_per_stage: discards,
        total_simulation_steps: steps,
        trajectories_run: trajectories,
        extinction,
        master_seed: seed,
        wall_time_s: clock.seconds(),
        diagnostics: Diagnostics { failures, ..Diagnostics::default() },
    })
}
