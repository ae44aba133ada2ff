//! Failure probability estimators: plain Monte-Carlo, adaptive multilevel
//! splitting, fixed-proposal importance sampling and cross-entropy.

mod ams;
mod ce;
mod is;
mod mc;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monitor::MonitorError;
use crate::sim::SimError;

pub use crate::sim::noise::{DetectionProposal, OffsetProposal, ProposalError, ProposalParams};
pub use ams::{ams_estimate, ams_probability, AmsParams};
pub use ce::{ce_estimate, CeParams};
pub use is::is_fixed_estimate;
pub use mc::mc_estimate;

/// Floor applied to log importance weights before exponentiation.
pub const LOG_WEIGHT_FLOOR: f64 = -745.0;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Proposal(#[from] ProposalError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Ams,
    Is,
    Ce,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Ams => "ams",
            Method::Is => "is",
            Method::Ce => "ce",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Extra statistics that are not part of the serialized result.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Binomial (MC) or sample (IS/CE) standard error of `p_hat`.
    pub std_error: Option<f64>,
    /// Effective sample size of the importance weights.
    pub ess: Option<f64>,
    /// CE fit or IS weights collapsed.
    pub degenerate: bool,
    /// Number of trajectories in the final population below the failure level.
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub method: Method,
    pub levels: Vec<f64>,
    pub discards_per_stage: Vec<usize>,
    pub total_simulation_steps: u64,
    pub trajectories_run: u64,
    pub extinction: bool,
    pub master_seed: u64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
}

impl Estimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serialization")
    }

    /// Writes `stage,gamma,discards`.
    pub fn write_level_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "gamma", "discards"])?;
        for (m, (g, k)) in self.levels.iter().zip(&self.discards_per_stage).enumerate() {
            w.write_record([m.to_string(), g.to_string(), k.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order always follows the input order.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

pub(crate) fn weight(log_weight: f64) -> f64 {
    log_weight.max(LOG_WEIGHT_FLOOR).exp()
}

/// Weighted estimate `(1/N) Σ w_i 1{fail_i}` with its standard error and
/// effective sample size `(Σw)² / Σw²`.
pub(crate) fn weighted_summary(weights: &[f64], fails: &[bool]) -> (f64, f64, f64) {
    let n = weights.len() as f64;
    let terms: Vec<f64> = weights.iter().zip(fails).map(|(&w, &f)| if f { w } else { 0.0 }).collect();
    let mean = terms.iter().sum::<f64>() / n;
    let var = if weights.len() > 1 {
        terms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sw: f64 = weights.iter().sum();
    let sw2: f64 = weights.iter().map(|w| w * w).sum();
    let ess = if sw2 > 0.0 { sw * sw / sw2 } else { 0.0 };
    (mean, (var / n).sqrt(), ess)
}
