//! Expert-aggregated ACI.
//!
//! `k` ACI learners with different step sizes run in parallel on the same
//! `beta_t` stream. Exponential weights on their pinball losses, mixed with a
//! `sigma` share of the uniform distribution, decide which level is emitted
//! ([`Output::Randomized`]) or how the levels are averaged
//! ([`Output::Averaged`]). The emitted level never feeds back into the
//! experts or weights (unless the literal update flag is set), so both output
//! rules follow the same internal trajectory under a fixed or decaying
//! schedule.

mod ensemble;
mod schedule;

pub use ensemble::{mix_weights, EnsembleConfig, EnsembleState, ExpertState, FaciStep, Output};
pub use schedule::{
    dynamic_eta, fixed_eta_heuristic, uniform_second_moment, EtaMode, EtaSchedule,
    DEFAULT_INTERVAL_LENGTH,
};

/// Step-size grid used in the volatility and panel experiments.
pub const DEFAULT_GAMMAS: [f64; 8] = [0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.064, 0.128];
