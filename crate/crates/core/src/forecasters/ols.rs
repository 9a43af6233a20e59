//! Least squares with an intercept, solved by SVD.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which lag of which input series a design column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagFeature {
    pub series: usize,
    pub lag: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsModel {
    /// Intercept first, then one coefficient per feature column.
    pub coefficients: Vec<f64>,
    pub layout: Vec<LagFeature>,
    pub rank: usize,
    pub rank_deficient: bool,
}

impl OlsModel {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len() + 1, self.coefficients.len());
        self.coefficients[0]
            + self.coefficients[1..]
                .iter()
                .zip(features)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

/// Fits `targets ~ 1 + rows`. Rank-deficient designs get the minimum-norm
/// solution.
pub fn rolling_ols_fit(rows: &[Vec<f64>], targets: &[f64]) -> Result<OlsModel> {
    rolling_ols_fit_with_layout(rows, targets, Vec::new())
}

/// As [`rolling_ols_fit`], recording `layout` (empty or one entry per column).
pub fn rolling_ols_fit_with_layout(rows: &[Vec<f64>], targets: &[f64], layout: Vec<LagFeature>) -> Result<OlsModel> {
    if rows.is_empty() {
        return Err(invalid("least squares needs at least one row"));
    }
    if rows.len() != targets.len() {
        return Err(invalid(format!("{} rows but {} targets", rows.len(), targets.len())));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(invalid("design rows have different lengths"));
    }
    if !layout.is_empty() && layout.len() != p {
        return Err(invalid("feature layout does not match the design"));
    }
    if rows.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(invalid("design and targets must be finite"));
    }
    let n = rows.len();
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let y = DVector::from_column_slice(targets);
    let svd = x.svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = (n.max(p + 1)) as f64 * f64::EPSILON * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let beta = svd
        .solve(&y, tol)
        .map_err(|e| invalid(format!("least squares solve failed: {e}")))?;
    Ok(OlsModel {
        coefficients: beta.iter().copied().collect(),
        layout,
        rank,
        rank_deficient: rank < p + 1,
    })
}
