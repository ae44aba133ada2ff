//! Reproducible randomness for simulators.
//!
//! Every stochastic draw goes through a [`Sampler`], which wraps a
//! counter-addressed [`NoiseStream`] and, when importance sampling, a
//! [`ProposalParams`] plus the running log likelihood ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stream reserved for the AMS replenishment source selection.
pub const SELECTION_STREAM: u64 = u64::MAX;

/// A deterministic stream of random numbers addressed by
/// `(master_seed, stream_id, counter)`. Distinct stream ids are
/// independent ChaCha streams under the same key.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        NoiseStream { master_seed, stream_id, rng }
    }

    /// Stream positioned at `counter`, as returned by [`NoiseStream::counter`].
    pub fn at(master_seed: u64, stream_id: u64, counter: u128) -> Self {
        let mut s = NoiseStream::new(master_seed, stream_id);
        s.rng.set_word_pos(counter);
        s
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProposalError {
    #[error("miss rate {0} outside [0, 1]")]
    MissRate(f64),
    #[error("proposal sigma {0} must be positive")]
    Sigma(f64),
    #[error("proposal parameter {0} is not finite")]
    NonFinite(&'static str),
}

/// How detection outcomes are drawn under the proposal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DetectionProposal {
    Target,
    /// Fixed probability of forced non-detection, independent of features.
    MissRate { rate: f64 },
    /// Adds `shift` to the target detection logit.
    LogitShift { shift: f64 },
}

/// How zero-mean Gaussian perturbations are drawn under the proposal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OffsetProposal {
    Target,
    /// Standardised draw `z ~ N(mean, scale²)`, offset `σ_target · z`.
    Standardized { mean: f64, scale: f64 },
    /// Offset drawn directly as `N(mean, sigma²)` in state units.
    Absolute { mean: f64, sigma: f64 },
}

/// Importance-sampling proposal over perception noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalParams {
    pub detection: DetectionProposal,
    pub offset: OffsetProposal,
}

impl ProposalParams {
    pub fn target() -> Self {
        ProposalParams { detection: DetectionProposal::Target, offset: OffsetProposal::Target }
    }

    /// Fixed proposal that misses half of all obstacles and adds unit-variance
    /// Gaussian offsets to the rest.
    pub fn naive() -> Self {
        ProposalParams {
            detection: DetectionProposal::MissRate { rate: 0.5 },
            offset: OffsetProposal::Absolute { mean: 0.0, sigma: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<(), ProposalError> {
        match self.detection {
            DetectionProposal::Target => {}
            DetectionProposal::MissRate { rate } => {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(ProposalError::MissRate(rate));
                }
            }
            DetectionProposal::LogitShift { shift } => {
                if !shift.is_finite() {
                    return Err(ProposalError::NonFinite("shift"));
                }
            }
        }
        match self.offset {
            OffsetProposal::Target => Ok(()),
            OffsetProposal::Standardized { mean, scale: s } | OffsetProposal::Absolute { mean, sigma: s } => {
                if !mean.is_finite() {
                    Err(ProposalError::NonFinite("mean"))
                } else if !(s > 0.0 && s.is_finite()) {
                    Err(ProposalError::Sigma(s))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_target(&self) -> bool {
        self.detection == DetectionProposal::Target && self.offset == OffsetProposal::Target
    }
}

impl Default for ProposalParams {
    fn default() -> Self {
        ProposalParams::target()
    }
}

/// Raw draws of one trajectory, kept for cross-entropy refits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DrawLog {
    /// `(target detection probability, detected)`.
    pub detections: Vec<(f64, bool)>,
    /// Offsets standardised by their target sigma.
    pub offsets: Vec<f64>,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Source of all randomness a simulator consumes.
#[derive(Clone, Debug)]
pub struct Sampler {
    stream: NoiseStream,
    proposal: ProposalParams,
    log_weight: f64,
    log: Option<DrawLog>,
}

impl Sampler {
    /// Draws from the target distribution; the log weight stays 0.
    pub fn target(stream: NoiseStream) -> Self {
        Sampler { stream, proposal: ProposalParams::target(), log_weight: 0.0, log: None }
    }

    pub fn with_proposal(stream: NoiseStream, proposal: ProposalParams) -> Self {
        Sampler { stream, proposal, log_weight: 0.0, log: None }
    }

    /// Keep a [`DrawLog`] of every detection and offset draw.
    pub fn recording(mut self) -> Self {
        self.log = Some(DrawLog::default());
        self
    }

    /// Continues from a recorded log weight (used when resuming).
    pub fn with_log_weight(mut self, log_weight: f64) -> Self {
        self.log_weight = log_weight;
        self
    }

    pub fn proposal(&self) -> &ProposalParams {
        &self.proposal
    }

    pub fn stream(&self) -> &NoiseStream {
        &self.stream
    }

    /// `ln(p_target / p_proposal)` accumulated over every draw so far.
    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn draw_log(&self) -> Option<&DrawLog> {
        self.log.as_ref()
    }

    pub fn take_draw_log(&mut self) -> Option<DrawLog> {
        self.log.take()
    }

    /// Auxiliary uniform draw that is never reweighted.
    pub fn uniform(&mut self) -> f64 {
        self.stream.uniform()
    }

    /// Bernoulli draw with target success probability `p`.
    pub fn detect(&mut self, p: f64) -> bool {
        let p = p.clamp(0.0, 1.0);
        let q = match self.proposal.detection {
            _ if p == 0.0 || p == 1.0 => p,
            DetectionProposal::Target => p,
            DetectionProposal::MissRate { rate } => 1.0 - rate,
            DetectionProposal::LogitShift { shift } => logistic(logit(p) + shift),
        };
        let hit = self.stream.uniform() < q;
        if q != p {
            self.log_weight += if hit { (p / q).ln() } else { ((1.0 - p) / (1.0 - q)).ln() };
        }
        if let Some(log) = self.log.as_mut() {
            log.detections.push((p, hit));
        }
        hit
    }

    /// Gaussian perturbation with target `N(0, sigma²)`. `sigma = 0` returns 0
    /// without consuming a draw.
    pub fn perturb(&mut self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        let e = self.stream.standard_normal();
        let offset = match self.proposal.offset {
            OffsetProposal::Target => sigma * e,
            OffsetProposal::Standardized { mean, scale } => {
                let z = mean + scale * e;
                // ln N(z; 0, 1) - ln N(z; mean, scale²)
                self.log_weight += -0.5 * z * z + 0.5 * e * e + scale.ln();
                sigma * z
            }
            OffsetProposal::Absolute { mean, sigma: s } => {
                let x = mean + s * e;
                self.log_weight += -0.5 * (x / sigma).powi(2) - sigma.ln() + 0.5 * e * e + s.ln();
                x
            }
        };
        if let Some(log) = self.log.as_mut() {
            log.offsets.push(offset / sigma);
        }
        offset
    }
}
