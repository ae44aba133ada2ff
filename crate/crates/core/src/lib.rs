//! Rare-event failure probability estimation for stochastic simulators
//! checked against signal temporal logic specifications.
//!
//! The crate couples an incremental STL robustness monitor with adaptive
//! multilevel splitting, and ships Monte-Carlo and importance-sampling
//! baselines plus two bundled scenarios: a scalar random walk with a known
//! answer and a three-lane highway lane-change.

pub mod cli;
pub mod estimators;
pub mod lane_change;
pub mod monitor;
pub mod sim;
pub mod stl;
