//! Experiment configuration as read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::streams::{NoiseLaw, Segment};
use crate::conformal::{ScoreKind, TargetLevel};
use crate::error::{Error, Result};
use crate::faci::{EnsembleConfig, EtaMode, EtaSchedule, DEFAULT_GAMMAS, DEFAULT_INTERVAL_LENGTH};
use crate::forecasters::GarchParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Aci,
    FaciRandomized,
    FaciAveraged,
    FixedAlpha,
    Bernoulli,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Aci => "aci",
            Self::FaciRandomized => "faci-randomized",
            Self::FaciAveraged => "faci-averaged",
            Self::FixedAlpha => "fixed-alpha",
            Self::Bernoulli => "bernoulli",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aci" => Ok(Self::Aci),
            "faci-randomized" => Ok(Self::FaciRandomized),
            "faci-averaged" => Ok(Self::FaciAveraged),
            "fixed-alpha" => Ok(Self::FixedAlpha),
            "bernoulli" => Ok(Self::Bernoulli),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Simulated GARCH return series for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarchSimConfig {
    pub params: GarchParams,
    pub length: usize,
    /// Rolling fit window for the one-step forecasts.
    #[serde(default = "default_garch_window")]
    pub fit_window: usize,
    #[serde(default = "default_refit_stride")]
    pub refit_stride: usize,
}

fn default_garch_window() -> usize {
    1250
}

fn default_refit_stride() -> usize {
    1
}

/// Simulated case-count panel for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSimConfig {
    pub units: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub gammas: Vec<f64>,
    /// Step size for `aci`; falls back to a single-entry `gammas`.
    pub gamma: Option<f64>,
    pub interval_length: usize,
    pub eta_mode: EtaMode,
    /// Overrides the heuristic base learning rate.
    pub eta: Option<f64>,
    /// Overrides `1 / (2 interval_length)`.
    pub sigma: Option<f64>,
    /// Decaying schedule constants; `c_eta` defaults to the heuristic rate.
    pub c_eta: Option<f64>,
    pub c_sigma: Option<f64>,
    pub alpha_init: Option<f64>,
    pub literal_expert_update: bool,
    pub algorithm: Algorithm,
    /// Score window capacity `W` in score mode.
    pub window: usize,
    pub score_kind: ScoreKind,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Adds one `alpha_e<i>` column per expert to `steps.csv`.
    pub record_experts: bool,
    pub bins: usize,
    pub min_bin_count: usize,
    /// Local coverage window; 500 for single series and 200 for panels.
    pub local_window: Option<usize>,
    /// Synthetic beta stream for `simulate`.
    pub segments: Vec<Segment>,
    pub garch: Option<GarchSimConfig>,
    pub panel: Option<PanelSimConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gammas: DEFAULT_GAMMAS.to_vec(),
            gamma: None,
            interval_length: DEFAULT_INTERVAL_LENGTH,
            eta_mode: EtaMode::Fixed,
            eta: None,
            sigma: None,
            c_eta: None,
            c_sigma: None,
            alpha_init: None,
            literal_expert_update: false,
            algorithm: Algorithm::FaciAveraged,
            window: 1250,
            score_kind: ScoreKind::Normalized,
            seed: 0,
            input: None,
            output: None,
            record_experts: false,
            bins: 10,
            min_bin_count: 30,
            local_window: None,
            segments: Vec::new(),
            garch: None,
            panel: None,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn target(&self) -> Result<TargetLevel> {
        TargetLevel::new(self.alpha).map_err(|e| bad(e.to_string()))
    }

    /// Step size used by `aci`.
    pub fn aci_gamma(&self) -> Result<f64> {
        match (self.gamma, self.gammas.as_slice()) {
            (Some(g), _) => Ok(g),
            (None, [g]) => Ok(*g),
            _ => Err(bad("aci needs `gamma` or a single-entry `gammas`")),
        }
    }

    pub fn single_local_window(&self) -> usize {
        self.local_window.unwrap_or(500)
    }

    pub fn panel_local_window(&self) -> usize {
        self.local_window.unwrap_or(200)
    }

    pub fn sigma_value(&self) -> f64 {
        self.sigma.unwrap_or(1.0 / (2.0 * self.interval_length as f64))
    }

    /// Checks every field against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<()> {
        self.target()?;
        if self.gammas.is_empty() {
            return Err(bad("gammas must not be empty"));
        }
        if self.gammas.iter().chain(self.gamma.iter()).any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(bad("step sizes must be finite and non-negative"));
        }
        if self.algorithm == Algorithm::Aci {
            self.aci_gamma()?;
        }
        if self.interval_length == 0 {
            return Err(bad("interval_length must be positive"));
        }
        if let Some(e) = self.eta {
            if !(e > 0.0) || !e.is_finite() {
                return Err(bad("eta must be positive"));
            }
        }
        if !(0.0..=0.5).contains(&self.sigma_value()) {
            return Err(bad("sigma must lie in [0, 1/2]"));
        }
        if self.c_eta.is_some_and(|c| !(c > 0.0)) || self.c_sigma.is_some_and(|c| !(c >= 0.0)) {
            return Err(bad("decay constants must be positive"));
        }
        if self.alpha_init.is_some_and(|a| !a.is_finite()) {
            return Err(bad("alpha_init must be finite"));
        }
        if self.window == 0 {
            return Err(bad("window must be positive"));
        }
        if self.bins == 0 {
            return Err(bad("bins must be positive"));
        }
        if self.local_window.is_some_and(|l| l == 0 || l % 2 != 0) {
            return Err(bad("local_window must be positive and even"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.alpha_star > 0.0 && s.alpha_star < 1.0) {
                return Err(bad(format!("segment {i}: alpha_star must lie in (0, 1)")));
            }
            if s.law == NoiseLaw::Uniform && s.alpha_star != self.alpha {
                return Err(bad(format!("segment {i}: the uniform law needs alpha_star = alpha")));
            }
        }
        if let Some(g) = &self.garch {
            if g.fit_window < crate::forecasters::garch::MIN_FIT_WINDOW || g.refit_stride == 0 {
                return Err(bad("garch fit_window must be >= 100 and refit_stride positive"));
            }
            if g.length <= g.fit_window {
                return Err(bad("garch length must exceed fit_window"));
            }
            if !g.params.is_stationary() || GarchParams::new(g.params.omega, g.params.tau, g.params.lambda).is_err() {
                return Err(bad("garch params must be valid and stationary"));
            }
        }
        if let Some(p) = &self.panel {
            if p.units < 2 || p.length == 0 {
                return Err(bad("panel needs at least two units"));
            }
        }
        self.schedule().map_err(|e| bad(e.to_string()))?;
        Ok(())
    }

    /// `eta`/`sigma` schedule for the configured grid.
    pub fn schedule(&self) -> Result<EtaSchedule> {
        let k = self.gammas.len();
        let il = self.interval_length;
        let heuristic = || crate::faci::fixed_eta_heuristic(self.alpha, k, il);
        let eta = match self.eta {
            Some(e) => e,
            None => heuristic()?,
        };
        match self.eta_mode {
            EtaMode::Fixed => EtaSchedule::fixed(k, il, eta, self.sigma_value()),
            EtaMode::Windowed => EtaSchedule::windowed(k, il, eta, self.sigma_value()),
            EtaMode::Decaying => EtaSchedule::decaying(k, il, self.c_eta.unwrap_or(eta), self.c_sigma.unwrap_or(1.0)),
        }
    }

    pub fn ensemble(&self) -> Result<EnsembleConfig> {
        Ok(EnsembleConfig {
            gammas: self.gammas.clone(),
            target: self.target()?,
            schedule: self.schedule()?,
            alpha_init: self.alpha_init,
            literal_expert_update: self.literal_expert_update,
        })
    }
}
