use crate::conformal::{pinball_loss, BetaValue, TargetLevel};
use crate::error::{invalid, Error, Result};

use super::schedule::EtaSchedule;

/// One fixed-step ACI learner inside the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertState {
    pub gamma: f64,
    pub alpha: f64,
    pub loss_sum: f64,
    pub err_count: u64,
}

/// Which output rule a step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    /// Draw `alpha^i_t` with probability `p^i_t`.
    Randomized,
    /// `sum_i p^i_t alpha^i_t`.
    Averaged,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FaciStep {
    pub alpha_t: f64,
    pub err: bool,
    pub eta: f64,
    pub sigma: f64,
    pub selected: Option<usize>,
    /// `l(beta_t, alpha_t)` for the emitted level.
    pub loss: f64,
    /// `sum_i p^i_t l(beta_t, alpha^i_t)`, the loss averaged over the selection.
    pub expected_loss: f64,
    /// `sum_i p^i_t l(beta_t, alpha^i_t)^2`.
    pub expected_sq_loss: f64,
}

/// Exponential reweighting followed by fixed-share mixing, without
/// normalization: `w'_i = (1 - sigma) w_i e^{-eta l_i} + sigma/k sum_j w_j e^{-eta l_j}`.
pub fn mix_weights(weights: &[f64], losses: &[f64], eta: f64, sigma: f64) -> Result<Vec<f64>> {
    if weights.len() != losses.len() || weights.is_empty() {
        return Err(invalid("weights and losses must be non-empty and equally long"));
    }
    if !(eta > 0.0) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    if !(0.0..=0.5).contains(&sigma) {
        return Err(invalid(format!("sigma must lie in [0, 1/2], got {sigma}")));
    }
    let k = weights.len() as f64;
    let reweighted: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * (-eta * l).exp())
        .collect();
    let total: f64 = reweighted.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::NonFiniteWeight);
    }
    Ok(reweighted
        .iter()
        .map(|w| (1.0 - sigma) * w + total * sigma / k)
        .collect())
}

/// Builder-style options for [`EnsembleState`].
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub gammas: Vec<f64>,
    pub target: TargetLevel,
    pub schedule: EtaSchedule,
    /// Starting level shared by all experts; defaults to the target.
    pub alpha_init: Option<f64>,
    /// Update every expert from the emitted level instead of its own level.
    pub literal_expert_update: bool,
}

/// Expert-aggregated ACI.
#[derive(Debug, Clone)]
pub struct EnsembleState {
    experts: Vec<ExpertState>,
    weights: Vec<f64>,
    schedule: EtaSchedule,
    target: TargetLevel,
    step_count: u64,
    literal_expert_update: bool,
    losses: Vec<f64>,
}

impl EnsembleState {
    pub fn new(config: EnsembleConfig) -> Result<Self> {
        let EnsembleConfig {
            gammas,
            target,
            schedule,
            alpha_init,
            literal_expert_update,
        } = config;
        if gammas.is_empty() {
            return Err(invalid("at least one step size is required"));
        }
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(invalid(format!("step sizes must be positive, got {g}")));
        }
        let a0 = alpha_init.unwrap_or(target.alpha());
        if !a0.is_finite() {
            return Err(invalid("initial alpha must be finite"));
        }
        let k = gammas.len();
        Ok(Self {
            experts: gammas
                .into_iter()
                .map(|gamma| ExpertState {
                    gamma,
                    alpha: a0,
                    loss_sum: 0.0,
                    err_count: 0,
                })
                .collect(),
            weights: vec![1.0; k],
            schedule,
            target,
            step_count: 0,
            literal_expert_update,
            losses: vec![0.0; k],
        })
    }

    pub fn k(&self) -> usize {
        self.experts.len()
    }

    pub fn experts(&self) -> &[ExpertState] {
        &self.experts
    }

    pub fn expert_alphas(&self) -> Vec<f64> {
        self.experts.iter().map(|e| e.alpha).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> TargetLevel {
        self.target
    }

    pub fn schedule(&self) -> &EtaSchedule {
        &self.schedule
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Overwrites the raw weights (they need not sum to one).
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.k() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(invalid("weights must be k positive finite values"));
        }
        self.weights = weights;
        Ok(())
    }

    /// `p^i_t = w^i_t / sum_j w^j_t`
    pub fn probabilities(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn alpha_bar(&self) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .zip(&self.experts)
            .map(|(w, e)| (w / total) * e.alpha)
            .sum()
    }

    /// Expert index chosen by inverse CDF for a uniform draw in `[0, 1)`.
    pub fn select(&self, draw: f64) -> usize {
        let total: f64 = self.weights.iter().sum();
        let target = draw * total;
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        self.k() - 1
    }

    /// Reweights the experts by their losses on `beta`, then renormalizes
    /// to unit total.
    pub fn update_weights(&mut self, beta: BetaValue, eta: f64, sigma: f64) -> Result<()> {
        let alpha = self.target.alpha();
        for (l, e) in self.losses.iter_mut().zip(&self.experts) {
            *l = pinball_loss(beta.get(), e.alpha, alpha);
        }
        let mixed = mix_weights(&self.weights, &self.losses, eta, sigma)?;
        let total: f64 = mixed.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::NonFiniteWeight);
        }
        for (w, m) in self.weights.iter_mut().zip(mixed) {
            *w = m / total;
        }
        Ok(())
    }

    /// One ACI step per expert, each with its own `err^i = 1{beta < alpha^i}`.
    /// With the literal update flag the recursion is anchored at `emitted`.
    pub fn update_experts(&mut self, beta: BetaValue, emitted: f64) {
        let alpha = self.target.alpha();
        let literal = self.literal_expert_update;
        for e in &mut self.experts {
            let err = beta.get() < e.alpha;
            e.loss_sum += pinball_loss(beta.get(), e.alpha, alpha);
            if err {
                e.err_count += 1;
            }
            let base = if literal { emitted } else { e.alpha };
            e.alpha = base + e.gamma * (alpha - if err { 1.0 } else { 0.0 });
        }
    }

    /// Randomized step: emits a randomly selected expert's level.
    pub fn step_randomized(&mut self, beta: BetaValue, draw: f64) -> Result<FaciStep> {
        if !(0.0..1.0).contains(&draw) {
            return Err(invalid(format!("uniform draw must lie in [0, 1), got {draw}")));
        }
        let i = self.select(draw);
        let out = self.experts[i].alpha;
        self.advance(beta, out, Some(i))
    }

    /// Averaged step: emits the probability-weighted level.
    pub fn step_averaged(&mut self, beta: BetaValue) -> Result<FaciStep> {
        let out = self.alpha_bar();
        self.advance(beta, out, None)
    }

    pub fn step(&mut self, beta: BetaValue, output: Output, draw: f64) -> Result<FaciStep> {
        match output {
            Output::Randomized => self.step_randomized(beta, draw),
            Output::Averaged => self.step_averaged(beta),
        }
    }

    fn advance(&mut self, beta: BetaValue, out: f64, selected: Option<usize>) -> Result<FaciStep> {
        let t = self.step_count + 1;
        let alpha = self.target.alpha();
        let b = beta.get();
        let eta = self.schedule.eta(t);
        let sigma = self.schedule.sigma(t);

        let total: f64 = self.weights.iter().sum();
        let (mut expected_loss, mut expected_sq_loss) = (0.0, 0.0);
        for (w, e) in self.weights.iter().zip(&self.experts) {
            let p = w / total;
            let l = pinball_loss(b, e.alpha, alpha);
            expected_loss += p * l;
            expected_sq_loss += p * l * l;
        }
        let loss = pinball_loss(b, out, alpha);

        self.update_weights(beta, eta, sigma)?;
        // Randomized output feeds the expectation over the draw, so the
        // learning-rate window never depends on the draw itself.
        self.schedule.record(match selected {
            Some(_) => expected_sq_loss,
            None => loss * loss,
        });
        self.update_experts(beta, out);
        self.step_count = t;

        Ok(FaciStep {
            alpha_t: out,
            err: b < out,
            eta,
            sigma,
            selected,
            loss,
            expected_loss,
            expected_sq_loss,
        })
    }
}
