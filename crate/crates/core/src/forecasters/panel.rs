//! Synthetic case-count panel and the pooled lagged-regression forecaster.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::ols::{rolling_ols_fit_with_layout, LagFeature};
use crate::error::{invalid, Result};
use crate::rng::{streams, StreamRng};

/// One `(t, unit)` observation with its forecast and lagged outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub t: u64,
    pub unit: String,
    pub y: f64,
    pub y_hat: f64,
    pub y_lag: f64,
}

/// `cases[i][t]` and a leading indicator `signal[i][t]` per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSeries {
    pub cases: Vec<Vec<f64>>,
    pub signal: Vec<Vec<f64>>,
}

impl PanelSeries {
    pub fn units(&self) -> usize {
        self.cases.len()
    }

    pub fn len(&self) -> usize {
        self.cases.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Waves with unit-specific level, period and phase under multiplicative
/// log-normal noise. The signal leads cases by `horizon` steps.
pub fn simulate_panel(units: usize, len: usize, horizon: usize, seed: u64) -> Result<PanelSeries> {
    if units == 0 || len == 0 {
        return Err(invalid("panel needs at least one unit and one step"));
    }
    let mut cases = Vec::with_capacity(units);
    let mut signal = Vec::with_capacity(units);
    for i in 0..units {
        let mut rng = StreamRng::new(seed, streams::PANEL_UNIT_BASE + i as u64);
        let level = 50.0 + 450.0 * rng.uniform();
        let period = 60.0 + 120.0 * rng.uniform();
        let phase = TAU * rng.uniform();
        let mean = |t: usize| level * (1.0 + 0.8 * (TAU * t as f64 / period + phase).sin());
        let c: Vec<f64> = (0..len)
            .map(|t| (mean(t) * (0.15 * rng.standard_normal()).exp()).round().max(0.0))
            .collect();
        let s: Vec<f64> = (0..len)
            .map(|t| mean(t + horizon) / level * (0.1 * rng.standard_normal()).exp())
            .collect();
        cases.push(c);
        signal.push(s);
    }
    Ok(PanelSeries { cases, signal })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelModelSpec {
    /// Forecast horizon and lag spacing.
    pub horizon: usize,
    /// Number of lags of each series.
    pub lags: usize,
    /// Training targets span `origin - span + 1 ..= origin`.
    pub span: usize,
    /// Refit every `stride` origins.
    pub stride: usize,
}

impl Default for PanelModelSpec {
    fn default() -> Self {
        Self {
            horizon: 7,
            lags: 3,
            span: 15,
            stride: 7,
        }
    }
}

impl PanelModelSpec {
    fn layout(&self) -> Vec<LagFeature> {
        (0..2)
            .flat_map(|series| (1..=self.lags).map(move |j| LagFeature { series, lag: j * self.horizon }))
            .collect()
    }

    fn features(&self, p: &PanelSeries, unit: usize, target: usize) -> Vec<f64> {
        self.layout()
            .iter()
            .map(|f| {
                let src = if f.series == 0 { &p.cases } else { &p.signal };
                src[unit][target - f.lag]
            })
            .collect()
    }

    /// First origin whose whole training span has its lags.
    pub fn first_origin(&self) -> usize {
        self.lags * self.horizon + self.span - 1
    }
}

/// `horizon`-ahead forecasts from a pooled regression of cases on lagged
/// cases and signal, fit over the trailing training span at each origin.
/// Row `t` holds the outcome at `t`, its forecast made at `t - horizon`, and
/// `y_lag` = cases at `t - horizon`.
pub fn panel_forecasts(p: &PanelSeries, spec: &PanelModelSpec) -> Result<Vec<PanelRow>> {
    if spec.horizon == 0 || spec.lags == 0 || spec.span == 0 || spec.stride == 0 {
        return Err(invalid("panel model parameters must be positive"));
    }
    let first = spec.first_origin();
    if p.len() <= first + spec.horizon {
        return Err(invalid(format!(
            "panel needs more than {} steps for this model",
            first + spec.horizon
        )));
    }
    let mut rows = Vec::new();
    let mut model = None;
    for origin in first..p.len() - spec.horizon {
        if model.is_none() || (origin - first).is_multiple_of(spec.stride) {
            let mut design = Vec::new();
            let mut targets = Vec::new();
            for s in origin + 1 - spec.span..=origin {
                for i in 0..p.units() {
                    design.push(spec.features(p, i, s));
                    targets.push(p.cases[i][s]);
                }
            }
            model = Some(rolling_ols_fit_with_layout(&design, &targets, spec.layout())?);
        }
        let m = model.as_ref().expect("fit above");
        let target = origin + spec.horizon;
        for i in 0..p.units() {
            rows.push(PanelRow {
                t: target as u64,
                unit: format!("u{i:03}"),
                y: p.cases[i][target],
                y_hat: m.predict(&spec.features(p, i, target)),
                y_lag: p.cases[i][origin],
            });
        }
    }
    Ok(rows)
}
