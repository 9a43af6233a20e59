//! Closed-form regret and coverage bounds for the expert-aggregated learner.
//!
//! Every evaluator here is a pure function of plain numbers; learners export
//! the diagnostics these need (losses, schedules) but are never inspected.

use serde::Serialize;

use crate::conformal::pinball_loss;
use crate::error::{invalid, Error, Result};

/// `sum_{t>=2} |a_t - a_{t-1}|`
pub fn path_length(alphas: &[f64]) -> Result<f64> {
    if alphas.is_empty() {
        return Err(invalid("path length of an empty sequence"));
    }
    Ok(alphas.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

/// Inputs of the interval regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretBoundInputs {
    pub interval_length: usize,
    pub k: usize,
    pub sigma: f64,
    pub eta: f64,
    /// `sum_{t in I} E[l(beta_t, alpha_t)^2]`
    pub sum_sq_losses: f64,
    /// `sum_{t in I, t > r} |alpha*_t - alpha*_{t-1}|`
    pub path_length: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_1: f64,
}

/// The three additive terms of the regret bound and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretBound {
    /// `(log(k/sigma) + 2 sigma |I|) / (eta |I|)`
    pub aggregation: f64,
    /// `eta / |I| * sum E[l^2]`
    pub variance: f64,
    /// `2 sqrt(3) (1 + gamma_max)^2 max{sqrt((path + 1)/|I|), gamma_1}`
    pub tracking: f64,
    pub total: f64,
}

/// Per-step average dynamic regret bound over an interval `I`.
///
/// Assumes a sorted grid with consecutive ratios at most 2 and
/// `gamma_k >= sqrt(1 + 1/|I|)`; see [`check_grid`].
pub fn dynamic_regret_bound(inputs: &RegretBoundInputs) -> Result<RegretBound> {
    let RegretBoundInputs {
        interval_length,
        k,
        sigma,
        eta,
        sum_sq_losses,
        path_length,
        gamma_min,
        gamma_max,
        gamma_1,
    } = *inputs;
    if sigma > 0.5 || !(sigma > 0.0) {
        return Err(Error::HypothesesViolated(format!("sigma must lie in (0, 1/2], got {sigma}")));
    }
    if !(eta > 0.0) {
        return Err(Error::HypothesesViolated(format!("eta must be positive, got {eta}")));
    }
    if interval_length == 0 || k == 0 {
        return Err(invalid("interval length and k must be positive"));
    }
    for (name, v) in [
        ("sum_sq_losses", sum_sq_losses),
        ("path_length", path_length),
        ("gamma_min", gamma_min),
        ("gamma_max", gamma_max),
        ("gamma_1", gamma_1),
    ] {
        if !(v >= 0.0) {
            return Err(invalid(format!("{name} must be non-negative, got {v}")));
        }
    }
    if gamma_min > gamma_max {
        return Err(invalid("gamma_min exceeds gamma_max"));
    }
    let n = interval_length as f64;
    let aggregation = ((k as f64 / sigma).ln() + 2.0 * sigma * n) / (eta * n);
    let variance = eta / n * sum_sq_losses;
    let reach = ((path_length + 1.0) / n).sqrt().max(gamma_1);
    let tracking = 2.0 * 3f64.sqrt() * (1.0 + gamma_max).powi(2) * reach;
    Ok(RegretBound {
        aggregation,
        variance,
        tracking,
        total: aggregation + variance + tracking,
    })
}

/// Whether a step-size grid satisfies the regret bound's hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridCheck {
    pub increasing: bool,
    pub ratios_at_most_two: bool,
    pub top_large_enough: bool,
}

impl GridCheck {
    pub fn holds(&self) -> bool {
        self.increasing && self.ratios_at_most_two && self.top_large_enough
    }
}

pub fn check_grid(gammas: &[f64], interval_length: usize) -> GridCheck {
    let increasing = gammas.windows(2).all(|w| w[0] < w[1]);
    let ratios_at_most_two = gammas.windows(2).all(|w| w[1] <= 2.0 * w[0]);
    let need = (1.0 + 1.0 / interval_length.max(1) as f64).sqrt();
    let top_large_enough = gammas.last().is_some_and(|g| *g >= need);
    GridCheck {
        increasing,
        ratios_at_most_two,
        top_large_enough,
    }
}

/// Regret bound for the windowed learning rate with interval length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowedRegretBound {
    /// `2 sqrt((log(2kL) + 2)/L) sqrt(mean E[l^2]) + tracking term`
    pub main: f64,
    /// The `O(1/sqrt(L))` remainder with unit constant; reported, not a bound.
    pub slack: f64,
}

pub fn windowed_eta_regret_bound(
    interval_length: usize,
    k: usize,
    mean_sq_loss: f64,
    path_length: f64,
    gamma_max: f64,
    gamma_1: f64,
) -> Result<WindowedRegretBound> {
    if interval_length == 0 || k == 0 {
        return Err(invalid("interval length and k must be positive"));
    }
    if !(mean_sq_loss >= 0.0) || !(path_length >= 0.0) {
        return Err(invalid("losses and path length must be non-negative"));
    }
    let l = interval_length as f64;
    let first = 2.0 * (((2 * k * interval_length) as f64).ln() + 2.0).sqrt() / l.sqrt() * mean_sq_loss.sqrt();
    let reach = ((path_length + 1.0) / l).sqrt().max(gamma_1);
    let tracking = 2.0 * 3f64.sqrt() * (1.0 + gamma_max).powi(2) * reach;
    Ok(WindowedRegretBound {
        main: first + tracking,
        slack: 1.0 / l.sqrt(),
    })
}

/// Bound on `|mean_t E[err_t] - alpha|` for time-varying `eta_t`, `sigma_t`.
///
/// The exponential factor is applied per step inside the average.
pub fn long_term_coverage_bound(
    horizon: usize,
    gamma_min: f64,
    gamma_max: f64,
    etas: &[f64],
    sigmas: &[f64],
) -> Result<f64> {
    if !(gamma_min > 0.0) {
        return Err(invalid(format!("gamma_min must be positive, got {gamma_min}")));
    }
    if gamma_max < gamma_min {
        return Err(invalid("gamma_max below gamma_min"));
    }
    if horizon == 0 || etas.len() != horizon || sigmas.len() != horizon {
        return Err(invalid(format!(
            "schedules must have length T = {horizon} (got {} and {})",
            etas.len(),
            sigmas.len()
        )));
    }
    if etas.iter().chain(sigmas).any(|v| !(*v >= 0.0)) {
        return Err(invalid("schedule entries must be non-negative"));
    }
    let t = horizon as f64;
    let spread = 1.0 + 2.0 * gamma_max;
    let first = spread / (t * gamma_min);
    let eta_avg = etas.iter().map(|e| (e * spread).exp() * e).sum::<f64>() / t;
    let sigma_avg = sigmas.iter().sum::<f64>() / t;
    Ok(first + spread * spread / gamma_min * eta_avg + 2.0 * (1.0 + gamma_max) / gamma_min * sigma_avg)
}

/// Finite distribution on `[0, 1]` given as `(value, mass)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("distribution needs at least one atom"));
        }
        if atoms.iter().any(|(v, m)| !v.is_finite() || !(*m >= 0.0)) {
            return Err(invalid("atoms need finite values and non-negative masses"));
        }
        let total: f64 = atoms.iter().map(|(_, m)| m).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|(v, m)| m * f(*v)).sum()
    }

    /// `P(beta < x)`
    pub fn mass_below(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|(v, _)| *v < x).map(|(_, m)| m).sum()
    }
}

/// Excess expected pinball loss of `tau` over the `alpha`-quantile `alpha_star`,
/// computed by enumeration (`lhs`) and through the interval identity (`rhs`):
/// `E[(tau - beta) 1{alpha* <= beta < tau}]` when `tau >= alpha*`, otherwise
/// `E[(beta - tau) 1{tau <= beta < alpha*}]`.
pub fn pinball_gap(
    dist: &DiscreteDistribution,
    tau: f64,
    alpha_star: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    let below = dist.mass_below(alpha_star);
    if (below - alpha).abs() > 1e-12 {
        return Err(Error::NotAQuantile {
            observed: below,
            expected: alpha,
        });
    }
    let lhs = dist.expect(|b| pinball_loss(b, tau, alpha)) - dist.expect(|b| pinball_loss(b, alpha_star, alpha));
    let rhs = if tau >= alpha_star {
        dist.expect(|b| if alpha_star <= b && b < tau { tau - b } else { 0.0 })
    } else {
        dist.expect(|b| if tau <= b && b < alpha_star { b - tau } else { 0.0 })
    };
    Ok((lhs, rhs))
}

fn check_interval(len: usize, start: usize, end: usize) -> Result<()> {
    if start > end || end >= len {
        return Err(invalid(format!("interval [{start}, {end}] outside 0..{len}")));
    }
    Ok(())
}

/// `(1/|I|) sum_{t in I} [l(beta_t, out_t) - l(beta_t, alpha*_t)]` over the
/// inclusive, 0-based interval `[start, end]`.
pub fn empirical_dynamic_regret(
    betas: &[f64],
    outputs: &[f64],
    oracle_alphas: &[f64],
    alpha: f64,
    start: usize,
    end: usize,
) -> Result<f64> {
    if betas.len() != outputs.len() || betas.len() != oracle_alphas.len() {
        return Err(invalid("betas, outputs and oracle levels must be equally long"));
    }
    check_interval(betas.len(), start, end)?;
    let n = (end - start + 1) as f64;
    let sum: f64 = (start..=end)
        .map(|t| pinball_loss(betas[t], outputs[t], alpha) - pinball_loss(betas[t], oracle_alphas[t], alpha))
        .sum();
    Ok(sum / n)
}

/// As [`empirical_dynamic_regret`] with the learner's per-step losses given
/// directly (e.g. losses already averaged over a randomized selection).
pub fn regret_from_losses(
    learner_losses: &[f64],
    betas: &[f64],
    oracle_alphas: &[f64],
    alpha: f64,
    start: usize,
    end: usize,
) -> Result<f64> {
    if betas.len() != learner_losses.len() || betas.len() != oracle_alphas.len() {
        return Err(invalid("losses, betas and oracle levels must be equally long"));
    }
    check_interval(betas.len(), start, end)?;
    let n = (end - start + 1) as f64;
    let sum: f64 = (start..=end)
        .map(|t| learner_losses[t] - pinball_loss(betas[t], oracle_alphas[t], alpha))
        .sum();
    Ok(sum / n)
}
