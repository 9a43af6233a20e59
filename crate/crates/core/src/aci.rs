//! Single fixed step-size adaptive conformal learner.

use crate::conformal::{BetaValue, TargetLevel};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AciState {
    pub alpha_t: f64,
    pub gamma: f64,
    pub target: TargetLevel,
}

impl AciState {
    /// Starts at the target level.
    pub fn new(target: TargetLevel, gamma: f64) -> Result<Self> {
        Self::with_init(target, gamma, target.alpha())
    }

    pub fn with_init(target: TargetLevel, gamma: f64, alpha_init: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("step size must be finite and >= 0, got {gamma}")));
        }
        if !alpha_init.is_finite() {
            return Err(invalid("initial alpha must be finite"));
        }
        Ok(Self {
            alpha_t: alpha_init,
            gamma,
            target,
        })
    }

    /// Miscoverage indicator `1{beta < alpha_t}`.
    #[inline]
    pub fn err(&self, beta: BetaValue) -> bool {
        beta.get() < self.alpha_t
    }

    #[inline]
    pub fn step(self, err: bool) -> Self {
        aci_step(self, err)
    }
}

/// `alpha_{t+1} = alpha_t + gamma (alpha - err)`
#[inline]
pub fn aci_step(state: AciState, err: bool) -> AciState {
    let e = if err { 1.0 } else { 0.0 };
    AciState {
        alpha_t: state.alpha_t + state.gamma * (state.target.alpha() - e),
        ..state
    }
}

/// Runs one learner over a stream, returning `(alpha_t, err_t)` per step.
pub fn run_aci(
    betas: &[BetaValue],
    gamma: f64,
    target: TargetLevel,
    alpha_init: f64,
) -> Result<Vec<(f64, bool)>> {
    let mut state = AciState::with_init(target, gamma, alpha_init)?;
    Ok(betas
        .iter()
        .map(|&b| {
            let a = state.alpha_t;
            let err = state.err(b);
            state = aci_step(state, err);
            (a, err)
        })
        .collect())
}
