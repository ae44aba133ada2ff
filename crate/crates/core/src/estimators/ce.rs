use std::sync::Arc;

use super::{
    par_map, weight, weighted_summary, DetectionProposal, Diagnostics, Estimate, EstimatorError, Method,
    OffsetProposal, ProposalParams, Stopwatch,
};
use crate::monitor::BoundFormula;
use crate::sim::{run_trajectory, DrawLog, NoiseStream, RunOptions, Sampler, Scenario};

const MAX_LOGIT_SHIFT: f64 = 12.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CeParams {
    /// Trajectories per stage.
    pub n_per_stage: usize,
    pub stages: usize,
    pub elite_frac: f64,
    pub gamma_final: f64,
}

impl CeParams {
    pub fn new(n_per_stage: usize, stages: usize) -> Self {
        CeParams { n_per_stage, stages, elite_frac: 0.1, gamma_final: 0.0 }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.n_per_stage == 0 || self.stages == 0 {
            return Err(EstimatorError::Params("CE needs at least one stage and one trajectory per stage".into()));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 0.5) {
            return Err(EstimatorError::Params(format!(
                "elite fraction must lie in (0, 0.5] (got {})",
                self.elite_frac
            )));
        }
        Ok(())
    }
}

impl Default for CeParams {
    fn default() -> Self {
        CeParams::new(250, 10)
    }
}

struct Sample {
    level: f64,
    log_weight: f64,
    draws: DrawLog,
    steps: usize,
}

/// Cross-entropy adaptive importance sampling over detection logit shift
/// and standardised offset mean/scale.
///
/// Stage `m` draws `N_m` trajectories on streams `(m << 32) + i` under the
/// current proposal, takes the `elite_frac` lowest-robustness ones (all
/// trajectories at or below `max(threshold, gamma_final)`), and refits the
/// proposal to their draws with self-normalised likelihood-ratio weights.
/// The estimate comes from the last stage run.
pub fn ce_estimate<S: Scenario>(
    scenario: &S,
    spec: &Arc<BoundFormula>,
    params: &CeParams,
    seed: u64,
) -> Result<Estimate, EstimatorError> {
    params.validate()?;
    let clock = Stopwatch::start();
    let n = params.n_per_stage;
    let opts = RunOptions { record_draws: true, ..RunOptions::default() };
    let mut proposal = ProposalParams::target();
    let mut levels = Vec::new();
    let mut discards = Vec::new();
    let mut steps = 0u64;
    let mut trajectories = 0u64;
    let mut degenerate = false;
    let mut last: Vec<Sample> = Vec::new();

    for m in 0..params.stages {
        let runs = par_map(n, |i| {
            let stream = ((m as u64) << 32) + i as u64;
            let sampler = Sampler::with_proposal(NoiseStream::new(seed, stream), proposal);
            run_trajectory(scenario, spec, sampler, opts).map(|r| Sample {
                level: r.final_level(),
                log_weight: r.log_weight,
                steps: r.steps_simulated,
                draws: r.draws.unwrap_or_default(),
            })
        });
        last = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
        steps += last.iter().map(|s| s.steps as u64).sum::<u64>();
        trajectories += n as u64;

        let mut sorted: Vec<f64> = last.iter().map(|s| s.level).collect();
        sorted.sort_by(f64::total_cmp);
        let n_elite = ((params.elite_frac * n as f64).ceil() as usize).clamp(1, n);
        let gamma = sorted[n_elite - 1].max(params.gamma_final);
        let elites: Vec<&Sample> = last.iter().filter(|s| s.level <= gamma).collect();
        levels.push(gamma);
        discards.push(n - elites.len());
        if m + 1 == params.stages {
            break;
        }
        match fit(&elites, &proposal) {
            Some(next) => proposal = next,
            None => {
                degenerate = true;
                break;
            }
        }
    }

    let weights: Vec<f64> = last.iter().map(|s| weight(s.log_weight)).collect();
    let fails: Vec<bool> = last.iter().map(|s| s.level < params.gamma_final).collect();
    let (p, se, ess) = weighted_summary(&weights, &fails);
    Ok(Estimate {
        p_hat: p.min(1.0),
        method: Method::Ce,
        levels,
        discards_per_stage: discards,
        total_simulation_steps: steps,
        trajectories_run: trajectories,
        extinction: false,
        master_seed: seed,
        wall_time_s: clock.seconds(),
        diagnostics: Diagnostics {
            std_error: Some(se),
            ess: Some(ess),
            degenerate,
            failures: fails.iter().filter(|&&f| f).count(),
        },
    })
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weighted maximum likelihood of the elite draws within the tilting
/// family. `None` when the elites carry no weight or their offsets have no
/// spread.
fn fit(elites: &[&Sample], current: &ProposalParams) -> Option<ProposalParams> {
    let max_lw = elites.iter().map(|s| s.log_weight).fold(f64::NEG_INFINITY, f64::max);
    if !max_lw.is_finite() {
        return None;
    }
    let w: Vec<f64> = elites.iter().map(|s| (s.log_weight - max_lw).exp()).collect();
    let total: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / total).collect();

    let has_detections = elites.iter().any(|s| !s.draws.detections.is_empty());
    let detection = if has_detections {
        let mut shift = 0.0;
        for _ in 0..50 {
            let (mut g, mut h) = (0.0, 0.0);
            for (s, &wi) in elites.iter().zip(&w) {
                for &(p, hit) in &s.draws.detections {
                    if p <= 0.0 || p >= 1.0 {
                        continue;
                    }
                    let q = logistic((p / (1.0 - p)).ln() + shift);
                    g += wi * (f64::from(u8::from(hit)) - q);
                    h += wi * q * (1.0 - q);
                }
            }
            if h < 1e-12 {
                break;
            }
            let step = g / h;
            shift = (shift + step).clamp(-MAX_LOGIT_SHIFT, MAX_LOGIT_SHIFT);
            if step.abs() < 1e-10 {
                break;
            }
        }
        DetectionProposal::LogitShift { shift }
    } else {
        current.detection
    };

    let count: f64 = elites.iter().zip(&w).map(|(s, wi)| wi * s.draws.offsets.len() as f64).sum();
    let offset = if count > 0.0 {
        let mean = elites.iter().zip(&w).map(|(s, wi)| wi * s.draws.offsets.iter().sum::<f64>()).sum::<f64>() / count;
        let var = elites
            .iter()
            .zip(&w)
            .map(|(s, wi)| wi * s.draws.offsets.iter().map(|z| (z - mean).powi(2)).sum::<f64>())
            .sum::<f64>()
            / count;
        if !(var > 1e-12) {
            return None;
        }
        OffsetProposal::Standardized { mean, scale: var.sqrt() }
    } else {
        current.offset
    };
    Some(ProposalParams { detection, offset })
}
