//! Conformity scores for the volatility and panel pipelines.

use crate::conformal::ScoreKind;
use crate::error::{invalid, Error, Result};

/// Score of outcome `y` against `point`; `aux` is the normalizer
/// ([`ScoreKind::Normalized`], defaults to `point`) or the lagged outcome
/// ([`ScoreKind::Relative`]).
pub fn conformity_score(kind: ScoreKind, y: f64, point: f64, aux: Option<f64>) -> Result<f64> {
    if !y.is_finite() || !point.is_finite() {
        return Err(invalid("score inputs must be finite"));
    }
    match kind {
        ScoreKind::Absolute => Ok((y - point).abs()),
        ScoreKind::Normalized => {
            let scale = aux.unwrap_or(point);
            if !(scale > 0.0) {
                return Err(invalid(format!("normalized score needs a positive scale, got {scale}")));
            }
            Ok((y - point).abs() / scale)
        }
        ScoreKind::Relative => {
            let lag = aux.ok_or_else(|| invalid("relative score needs the lagged outcome"))?;
            panel_score(y, point, lag)
        }
    }
}

/// `|v - forecast| / forecast` (normalized) or `|v - forecast|` (absolute).
pub fn volatility_score(v: f64, forecast: f64, kind: ScoreKind) -> Result<f64> {
    match kind {
        ScoreKind::Absolute | ScoreKind::Normalized => conformity_score(kind, v, forecast, None),
        ScoreKind::Relative => Err(invalid("volatility scores are normalized or absolute")),
    }
}

/// `|y_hat - y| / |y_lag - y|`.
pub fn panel_score(y: f64, y_hat: f64, y_lag: f64) -> Result<f64> {
    if !y.is_finite() || !y_hat.is_finite() || !y_lag.is_finite() {
        return Err(invalid("score inputs must be finite"));
    }
    let denom = (y_lag - y).abs();
    if denom == 0.0 {
        return Err(Error::UndefinedRelativeScore);
    }
    Ok((y_hat - y).abs() / denom)
}
