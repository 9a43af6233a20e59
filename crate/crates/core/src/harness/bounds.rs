//! Theory evaluators driven by an experiment configuration.

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::faci::{uniform_second_moment, EtaMode};
use crate::theory::{
    check_grid, dynamic_regret_bound, long_term_coverage_bound, windowed_eta_regret_bound, GridCheck, RegretBound,
    RegretBoundInputs, WindowedRegretBound,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub alpha: f64,
    pub k: usize,
    pub interval_length: usize,
    pub eta: f64,
    pub sigma: f64,
    pub grid: GridCheck,
    pub grid_satisfies_hypotheses: bool,
    /// Path length of the configured segments' oracle levels.
    pub path_length: f64,
    /// `E[l^2]` plugged into the loss-dependent terms.
    pub mean_sq_loss: f64,
    pub regret_inputs: RegretBoundInputs,
    /// `None` when the configuration violates the bound's hypotheses.
    pub regret: Option<RegretBound>,
    pub regret_error: Option<String>,
    pub windowed: Option<WindowedRegretBound>,
    pub horizon: usize,
    pub long_term_coverage: Option<f64>,
}

/// Evaluates every bound at the configured grid and schedule. Loss-dependent
/// terms use `mean_sq_loss` when given and the uniform-`beta` second moment
/// otherwise; the horizon is the total segment length (or `interval_length`).
pub fn evaluate_bounds(cfg: &ExperimentConfig, mean_sq_loss: Option<f64>) -> Result<BoundsReport> {
    cfg.validate()?;
    let k = cfg.gammas.len();
    let il = cfg.interval_length;
    let schedule = cfg.schedule()?;
    let eta = schedule.base_eta();
    let sigma = cfg.sigma_value();
    let mut sorted = cfg.gammas.clone();
    sorted.sort_by(f64::total_cmp);
    let gamma_min = sorted[0];
    let gamma_max = *sorted.last().expect("non-empty");
    let grid = check_grid(&sorted, il);
    let alphas: Vec<f64> = cfg.segments.iter().filter(|s| s.length > 0).map(|s| s.alpha_star).collect();
    let path_length = alphas.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let m2 = mean_sq_loss.unwrap_or_else(|| uniform_second_moment(cfg.alpha));

    let regret_inputs = RegretBoundInputs {
        interval_length: il,
        k,
        sigma,
        eta,
        sum_sq_losses: m2 * il as f64,
        path_length,
        gamma_min,
        gamma_max,
        gamma_1: gamma_min,
    };
    let (regret, regret_error) = match dynamic_regret_bound(&regret_inputs) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let windowed = windowed_eta_regret_bound(il, k, m2, path_length, gamma_max, gamma_min).ok();

    let horizon = match cfg.segments.iter().map(|s| s.length).sum::<usize>() {
        0 => il,
        n => n,
    };
    let long_term_coverage = if cfg.eta_mode == EtaMode::Windowed || gamma_min <= 0.0 {
        None
    } else {
        let etas: Vec<f64> = (1..=horizon as u64).map(|t| schedule.eta(t)).collect();
        let sigmas: Vec<f64> = (1..=horizon as u64).map(|t| schedule.sigma(t)).collect();
        long_term_coverage_bound(horizon, gamma_min, gamma_max, &etas, &sigmas).ok()
    };

    Ok(BoundsReport {
        alpha: cfg.alpha,
        k,
        interval_length: il,
        eta,
        sigma,
        grid_satisfies_hypotheses: grid.holds(),
        grid,
        path_length,
        mean_sq_loss: m2,
        regret_inputs,
        regret,
        regret_error,
        windowed,
        horizon,
        long_term_coverage,
    })
}
