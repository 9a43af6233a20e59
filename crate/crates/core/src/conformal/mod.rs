//! Split-style conformal prediction sets over a rolling score window.
//!
//! Quantiles use the lower order-statistic convention: for `tau` in `(0, 1)`
//! the empirical quantile of `n` scores is the `ceil(tau * n)`-th smallest.
//! `tau >= 1` maps to `+inf` (the whole line) and `tau <= 0` to `-inf`
//! (the empty set).

mod window;

pub use window::ScoreWindow;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Target miscoverage level, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TargetLevel(f64);

impl TargetLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(invalid(format!("target alpha must lie in (0, 1), got {alpha}")))
        }
    }

    #[inline]
    pub fn alpha(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TargetLevel {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TargetLevel> for f64 {
    fn from(t: TargetLevel) -> f64 {
        t.0
    }
}

/// `sup { b : outcome in C(b) }`, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BetaValue(f64);

impl BetaValue {
    pub fn new(beta: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&beta) {
            Ok(Self(beta))
        } else {
            Err(invalid(format!("beta must lie in [0, 1], got {beta}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// How a conformity score relates an outcome to a point prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// `|y - point|`
    Absolute,
    /// `|y - point| / scale`, where `scale` defaults to the point itself.
    Normalized,
    /// `|point - y| / |lag - y|`
    Relative,
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "unnormalized" => Ok(Self::Absolute),
            "normalized" => Ok(Self::Normalized),
            "relative" => Ok(Self::Relative),
            other => Err(invalid(format!("unknown score kind '{other}'"))),
        }
    }
}

/// Closed interval `[lo, hi]`. The empty set is stored as the zero-width
/// interval at the point prediction with `empty` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub empty: bool,
}

impl PredictionInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self {
            lo,
            hi,
            width: hi - lo,
            empty: false,
        }
    }

    pub fn unbounded() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn empty_at(point: f64) -> Self {
        Self {
            lo: point,
            hi: point,
            width: 0.0,
            empty: true,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        !self.empty && self.lo <= y && y <= self.hi
    }
}

/// Empirical `tau`-quantile of the stored scores.
pub fn empirical_quantile(tau: f64, window: &ScoreWindow) -> Result<f64> {
    if tau >= 1.0 {
        return Ok(f64::INFINITY);
    }
    if tau <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = window.len();
    if n == 0 {
        return Err(Error::EmptyWindow);
    }
    let rank = ((tau * n as f64).ceil() as usize).clamp(1, n);
    window.order_statistic(rank)
}

/// Fraction of stored scores at least as large as `score`.
pub fn compute_beta(score: f64, window: &ScoreWindow) -> Result<BetaValue> {
    let n = window.len();
    if n == 0 {
        return Err(Error::EmptyWindow);
    }
    if score.is_nan() {
        return Err(invalid("score is NaN"));
    }
    Ok(BetaValue(window.count_at_least(score) as f64 / n as f64))
}

/// Whether `score` falls inside the level-`alpha` prediction set.
pub fn set_membership(score: f64, alpha: f64, window: &ScoreWindow) -> Result<bool> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(score <= empirical_quantile(1.0 - alpha, window)?)
}

/// Turns a score quantile into an interval on the outcome scale.
///
/// `aux` is the normalizer for [`ScoreKind::Normalized`] (defaults to
/// `point`) and the lagged outcome for [`ScoreKind::Relative`] (required).
pub fn interval_from_quantile(
    point: f64,
    q: f64,
    kind: ScoreKind,
    aux: Option<f64>,
) -> Result<PredictionInterval> {
    if q.is_nan() {
        return Err(invalid("quantile is NaN"));
    }
    if q < 0.0 {
        return Ok(PredictionInterval::empty_at(point));
    }
    if q.is_infinite() {
        return Ok(PredictionInterval::unbounded());
    }
    match kind {
        ScoreKind::Absolute => Ok(PredictionInterval::new(point - q, point + q)),
        ScoreKind::Normalized => {
            let scale = aux.unwrap_or(point);
            if !(scale > 0.0) {
                return Err(invalid(format!("normalized score needs a positive scale, got {scale}")));
            }
            Ok(PredictionInterval::new(point - q * scale, point + q * scale))
        }
        ScoreKind::Relative => {
            let lag = aux.ok_or_else(|| invalid("relative score needs the lagged outcome"))?;
            if q >= 1.0 {
                return Err(Error::UnboundedRelativeSet(q));
            }
            // Roots of (point - c)^2 = q^2 (lag - c)^2.
            let a = (point - q * lag) / (1.0 - q);
            let b = (point + q * lag) / (1.0 + q);
            Ok(PredictionInterval::new(a.min(b), a.max(b)))
        }
    }
}

/// `alpha (beta - theta) - min(0, beta - theta)`
#[inline]
pub fn pinball_loss(beta: f64, theta: f64, alpha: f64) -> f64 {
    let d = beta - theta;
    alpha * d - d.min(0.0)
}

/// Subgradient of [`pinball_loss`] in `theta`: `-alpha + 1{beta < theta}`.
#[inline]
pub fn pinball_subgradient(beta: f64, theta: f64, alpha: f64) -> f64 {
    if beta < theta {
        1.0 - alpha
    } else {
        -alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn win(xs: &[f64]) -> ScoreWindow {
        ScoreWindow::from_scores(xs.len().max(1), xs.iter().copied()).unwrap()
    }

    #[test]
    fn target_level_bounds() {
        assert!(TargetLevel::new(0.1).is_ok());
        assert!(TargetLevel::new(0.0).is_err());
        assert!(TargetLevel::new(1.0).is_err());
        assert!(TargetLevel::new(f64::NAN).is_err());
    }

    #[test]
    fn quantile_conventions() {
        let empty = ScoreWindow::new(4).unwrap();
        assert_eq!(empirical_quantile(1.0, &empty).unwrap(), f64::INFINITY);
        assert_eq!(empirical_quantile(1.5, &empty).unwrap(), f64::INFINITY);
        assert_eq!(empirical_quantile(0.0, &empty).unwrap(), f64::NEG_INFINITY);
        assert_eq!(empirical_quantile(0.5, &empty), Err(Error::EmptyWindow));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantile(0.5, &win(&[4.0, 1.0, 3.0, 2.0])).unwrap(), 2.0);
        assert_eq!(empirical_quantile(0.9, &win(&[5.0])).unwrap(), 5.0);
        assert_eq!(empirical_quantile(0.75, &win(&[1.0, 2.0, 3.0, 4.0])).unwrap(), 3.0);
    }

    #[test]
    fn beta_examples() {
        let w = win(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(compute_beta(2.5, &w).unwrap().get(), 0.5);
        assert_eq!(compute_beta(0.5, &w).unwrap().get(), 1.0);
        assert_eq!(compute_beta(2.0, &win(&[1.0, 2.0, 2.0, 3.0])).unwrap().get(), 0.75);
        assert_eq!(compute_beta(1.0, &ScoreWindow::new(2).unwrap()), Err(Error::EmptyWindow));
    }

    #[test]
    fn membership_examples() {
        assert!(set_membership(3.0, 0.25, &win(&[1.0, 2.0, 3.0, 4.0])).unwrap());
        assert!(set_membership(10.0, 0.0, &win(&[1.0, 2.0, 3.0])).unwrap());
        assert!(!set_membership(0.0, 1.0, &win(&[1.0, 2.0, 3.0])).unwrap());
        assert!(set_membership(0.0, 0.5, &ScoreWindow::new(1).unwrap()).is_err());
    }

    #[test]
    fn interval_examples() {
        let abs = interval_from_quantile(2.0, 0.5, ScoreKind::Absolute, None).unwrap();
        assert_eq!((abs.lo, abs.hi, abs.width), (1.5, 2.5, 1.0));
        let norm = interval_from_quantile(2.0, 0.5, ScoreKind::Normalized, None).unwrap();
        assert_eq!((norm.lo, norm.hi), (1.0, 3.0));
        let inf = interval_from_quantile(2.0, f64::INFINITY, ScoreKind::Relative, Some(1.0)).unwrap();
        assert!(inf.width.is_infinite());
        let empty = interval_from_quantile(2.0, f64::NEG_INFINITY, ScoreKind::Absolute, None).unwrap();
        assert!(empty.empty && !empty.contains(2.0));
    }

    #[test]
    fn relative_interval_matches_grid_oracle() {
        let (point, q, lag) = (4.0, 0.5, 2.0);
        let iv = interval_from_quantile(point, q, ScoreKind::Relative, Some(lag)).unwrap();
        // Dense grid over c, keep points satisfying |point - c| <= q |lag - c|.
        let step = 1e-5;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut c = -20.0;
        while c <= 20.0 {
            if (point - c).abs() <= q * (lag - c).abs() {
                lo = lo.min(c);
                hi = hi.max(c);
            }
            c += step;
        }
        assert!((iv.lo - lo).abs() < 2.0 * step, "{} vs {lo}", iv.lo);
        assert!((iv.hi - hi).abs() < 2.0 * step, "{} vs {hi}", iv.hi);
        assert!((iv.lo - 10.0 / 3.0).abs() < 1e-12);
        assert!((iv.hi - 6.0).abs() < 1e-12);
    }

    #[test]
    fn relative_rejects_large_quantile() {
        assert_eq!(
            interval_from_quantile(4.0, 1.0, ScoreKind::Relative, Some(2.0)),
            Err(Error::UnboundedRelativeSet(1.0))
        );
        assert!(interval_from_quantile(4.0, 0.5, ScoreKind::Relative, None).is_err());
        assert!(interval_from_quantile(-1.0, 0.5, ScoreKind::Normalized, None).is_err());
    }

    #[test]
    fn pinball_values() {
        assert_eq!(pinball_loss(0.5, 0.5, 0.1), 0.0);
        assert!((pinball_loss(0.5, 0.2, 0.1) - 0.03).abs() < 1e-15);
        assert!((pinball_loss(0.2, 0.5, 0.1) - 0.27).abs() < 1e-15);
        assert_eq!(pinball_subgradient(0.5, 0.2, 0.1), -0.1);
        assert_eq!(pinball_subgradient(0.2, 0.5, 0.1), 0.9);
        assert_eq!(pinball_subgradient(0.3, 0.3, 0.1), -0.1);
    }
}
