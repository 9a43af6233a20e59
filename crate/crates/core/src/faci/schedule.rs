use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default interval length `|I|` used to tune `eta` and `sigma`.
pub const DEFAULT_INTERVAL_LENGTH: usize = 500;

/// `E[l(beta, alpha)^2]` for `beta ~ Unif(0, 1)`.
pub fn uniform_second_moment(alpha: f64) -> f64 {
    let a = alpha;
    let b = 1.0 - alpha;
    (b * b * a * a * a + a * a * b * b * b) / 3.0
}

fn numerator(k: usize, interval_length: usize) -> f64 {
    ((k * interval_length) as f64).ln() + 2.0
}

/// Learning rate tuned for the no-shift setting:
/// `sqrt((log(k |I|) + 2) / (|I| m2(alpha)))`.
pub fn fixed_eta_heuristic(alpha: f64, k: usize, interval_length: usize) -> Result<f64> {
    if k == 0 || interval_length == 0 {
        return Err(invalid("k and interval length must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let m2 = uniform_second_moment(alpha);
    Ok((numerator(k, interval_length) / (interval_length as f64 * m2)).sqrt())
}

/// Learning rate from the trailing window of realized losses:
/// `sqrt((log(k |I|) + 2) / sum l^2)`.
pub fn dynamic_eta(trailing_losses: &[f64], k: usize, interval_length: usize) -> Result<f64> {
    if trailing_losses.len() != interval_length {
        return Err(invalid(format!(
            "expected {interval_length} trailing losses, got {}",
            trailing_losses.len()
        )));
    }
    if k == 0 || interval_length == 0 {
        return Err(invalid("k and interval length must be positive"));
    }
    if trailing_losses.iter().any(|l| !(*l >= 0.0)) {
        return Err(invalid("losses must be non-negative"));
    }
    let sum_sq: f64 = trailing_losses.iter().map(|l| l * l).sum();
    eta_from_sum_sq(sum_sq, k, interval_length)
}

fn eta_from_sum_sq(sum_sq: f64, k: usize, interval_length: usize) -> Result<f64> {
    if !(sum_sq > 0.0) {
        return Err(Error::DegenerateLossWindow);
    }
    Ok((numerator(k, interval_length) / sum_sq).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    Fixed,
    Windowed,
    Decaying,
}

impl std::str::FromStr for EtaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "windowed" => Ok(Self::Windowed),
            "decaying" => Ok(Self::Decaying),
            other => Err(invalid(format!("unknown eta mode '{other}'"))),
        }
    }
}

/// Per-step `(eta_t, sigma_t)` policy for the expert weights.
#[derive(Debug, Clone)]
pub struct EtaSchedule {
    mode: EtaMode,
    interval_length: usize,
    k: usize,
    fixed_eta: f64,
    sigma: f64,
    decay_eta: f64,
    decay_sigma: f64,
    /// Trailing squared losses (windowed mode only).
    trailing_sq: VecDeque<f64>,
}

impl EtaSchedule {
    /// Constant `eta` and `sigma`.
    pub fn fixed(k: usize, interval_length: usize, eta: f64, sigma: f64) -> Result<Self> {
        Self::build(EtaMode::Fixed, k, interval_length, eta, sigma, 0.0, 0.0)
    }

    /// `eta_t` from the last `interval_length` squared losses, `fallback_eta`
    /// until the window fills (or if it degenerates).
    pub fn windowed(k: usize, interval_length: usize, fallback_eta: f64, sigma: f64) -> Result<Self> {
        Self::build(EtaMode::Windowed, k, interval_length, fallback_eta, sigma, 0.0, 0.0)
    }

    /// `eta_t = c_eta / sqrt(t)`, `sigma_t = min(1/2, c_sigma / t)`.
    pub fn decaying(k: usize, interval_length: usize, c_eta: f64, c_sigma: f64) -> Result<Self> {
        if !(c_eta > 0.0) || !(c_sigma >= 0.0) {
            return Err(invalid("decay constants must be positive"));
        }
        Self::build(EtaMode::Decaying, k, interval_length, c_eta, 0.0, c_eta, c_sigma)
    }

    /// The library defaults for `mode`: heuristic `eta`, `sigma = 1/(2|I|)`,
    /// and `c_sigma = 1` for the decaying schedule.
    pub fn default_for(mode: EtaMode, alpha: f64, k: usize, interval_length: usize) -> Result<Self> {
        let eta = fixed_eta_heuristic(alpha, k, interval_length)?;
        let sigma = 1.0 / (2.0 * interval_length as f64);
        match mode {
            EtaMode::Fixed => Self::fixed(k, interval_length, eta, sigma),
            EtaMode::Windowed => Self::windowed(k, interval_length, eta, sigma),
            EtaMode::Decaying => Self::decaying(k, interval_length, eta, 1.0),
        }
    }

    fn build(
        mode: EtaMode,
        k: usize,
        interval_length: usize,
        eta: f64,
        sigma: f64,
        decay_eta: f64,
        decay_sigma: f64,
    ) -> Result<Self> {
        if k == 0 || interval_length == 0 {
            return Err(invalid("k and interval length must be positive"));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        if !(0.0..=0.5).contains(&sigma) {
            return Err(invalid(format!("sigma must lie in [0, 1/2], got {sigma}")));
        }
        Ok(Self {
            mode,
            interval_length,
            k,
            fixed_eta: eta,
            sigma,
            decay_eta,
            decay_sigma,
            trailing_sq: VecDeque::with_capacity(if mode == EtaMode::Windowed {
                interval_length
            } else {
                0
            }),
        })
    }

    pub fn mode(&self) -> EtaMode {
        self.mode
    }

    pub fn interval_length(&self) -> usize {
        self.interval_length
    }

    pub fn base_eta(&self) -> f64 {
        self.fixed_eta
    }

    /// `eta_t` for the 1-based step `t`.
    pub fn eta(&self, t: u64) -> f64 {
        match self.mode {
            EtaMode::Fixed => self.fixed_eta,
            EtaMode::Windowed => {
                if self.trailing_sq.len() < self.interval_length {
                    return self.fixed_eta;
                }
                let sum_sq: f64 = self.trailing_sq.iter().sum();
                eta_from_sum_sq(sum_sq, self.k, self.interval_length).unwrap_or(self.fixed_eta)
            }
            EtaMode::Decaying => self.decay_eta / (t.max(1) as f64).sqrt(),
        }
    }

    /// `sigma_t` for the 1-based step `t`.
    pub fn sigma(&self, t: u64) -> f64 {
        match self.mode {
            EtaMode::Fixed | EtaMode::Windowed => self.sigma,
            EtaMode::Decaying => (self.decay_sigma / t.max(1) as f64).min(0.5),
        }
    }

    /// Feeds the squared ensemble loss of the step just completed.
    pub fn record(&mut self, sq_loss: f64) {
        if self.mode != EtaMode::Windowed {
            return;
        }
        if self.trailing_sq.len() == self.interval_length {
            self.trailing_sq.pop_front();
        }
        self.trailing_sq.push_back(sq_loss);
    }
}
