//! GARCH(1,1) simulation and Gaussian quasi-likelihood fitting.

use serde::{Deserialize, Serialize};

use super::simplex::{minimize, SimplexOptions};
use crate::error::{invalid, Error, Result};
use crate::rng::{streams, StreamRng};

/// Largest `tau + lambda` a fit may return.
pub const PERSISTENCE_CAP: f64 = 0.999;
/// Half the 95% chi-square(2) quantile. When the fitted model improves the
/// negative log-likelihood of `tau = lambda = 0` by less than this, the
/// constant-variance model is returned: without volatility clustering
/// `lambda` is unidentified and the optimum wanders along a flat ridge.
pub const NULL_MODEL_LR_THRESHOLD: f64 = 5.991_464_547_107_979 / 2.0;
/// Smallest usable fitting window.
pub const MIN_FIT_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub tau: f64,
    pub lambda: f64,
}

impl GarchParams {
    pub fn new(omega: f64, tau: f64, lambda: f64) -> Result<Self> {
        let p = Self { omega, tau, lambda };
        if !p.is_valid() {
            return Err(invalid(format!(
                "GARCH parameters need omega > 0 and tau, lambda >= 0 (got {omega}, {tau}, {lambda})"
            )));
        }
        Ok(p)
    }

    fn is_valid(&self) -> bool {
        self.omega > 0.0
            && self.omega.is_finite()
            && self.tau >= 0.0
            && self.tau.is_finite()
            && self.lambda >= 0.0
            && self.lambda.is_finite()
    }

    pub fn persistence(&self) -> f64 {
        self.tau + self.lambda
    }

    pub fn is_stationary(&self) -> bool {
        self.persistence() < 1.0
    }

    /// `omega / (1 - tau - lambda)` for stationary parameters.
    pub fn unconditional_variance(&self) -> Option<f64> {
        self.is_stationary().then(|| self.omega / (1.0 - self.persistence()))
    }

    /// `sigma2_t` from `R_{t-1}` and `sigma2_{t-1}`.
    #[inline]
    pub fn next_variance(&self, prev_return: f64, prev_sigma2: f64) -> f64 {
        self.omega + self.tau * (prev_return * prev_return) + self.lambda * prev_sigma2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchPath {
    pub returns: Vec<f64>,
    pub sigma2: Vec<f64>,
}

/// Simulates `len` returns from the stationary initial variance.
pub fn garch_simulate(params: GarchParams, len: usize, seed: u64) -> Result<GarchPath> {
    let init = params
        .unconditional_variance()
        .ok_or_else(|| invalid("stationary initialization needs tau + lambda < 1"))?;
    let mut rng = StreamRng::new(seed, streams::GARCH);
    let eps: Vec<f64> = (0..len).map(|_| rng.standard_normal()).collect();
    garch_simulate_with(params, &eps, init)
}

/// Simulates from explicit innovations and initial variance.
pub fn garch_simulate_with(params: GarchParams, innovations: &[f64], sigma2_init: f64) -> Result<GarchPath> {
    if !(sigma2_init > 0.0) || !sigma2_init.is_finite() {
        return Err(invalid("initial variance must be positive"));
    }
    let n = innovations.len();
    let mut returns = Vec::with_capacity(n);
    let mut sigma2 = Vec::with_capacity(n);
    let mut s2 = sigma2_init;
    for (t, &e) in innovations.iter().enumerate() {
        if t > 0 {
            s2 = params.next_variance(returns[t - 1], s2);
        }
        sigma2.push(s2);
        returns.push(s2.sqrt() * e);
    }
    Ok(GarchPath { returns, sigma2 })
}

/// Conditional variance path implied by `params` on `returns`.
pub fn garch_variance_path(params: GarchParams, returns: &[f64], sigma2_init: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len());
    let mut s2 = sigma2_init;
    for t in 0..returns.len() {
        if t > 0 {
            s2 = params.next_variance(returns[t - 1], s2);
        }
        out.push(s2);
    }
    out
}

/// `0.5 * sum(log sigma2_t + R_t^2 / sigma2_t)`; `+inf` for infeasible
/// parameters (`omega <= 0`, negative coefficients, `tau + lambda >= 1`).
pub fn garch_nll(params: GarchParams, returns: &[f64], sigma2_init: f64) -> f64 {
    if !params.is_valid() || !params.is_stationary() || !(sigma2_init > 0.0) {
        return f64::INFINITY;
    }
    let mut s2 = sigma2_init;
    let mut total = 0.0;
    for t in 0..returns.len() {
        if t > 0 {
            s2 = params.next_variance(returns[t - 1], s2);
        }
        let r = returns[t];
        total += s2.ln() + r * r / s2;
    }
    if total.is_nan() {
        f64::INFINITY
    } else {
        0.5 * total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub params: GarchParams,
    /// `sigma2` over the fitting window, starting from the sample variance.
    pub sigma2_path: Vec<f64>,
    /// `V_W = R_W^2`, the last squared return in the window.
    pub last_sq_return: f64,
    pub one_step_forecast: f64,
    pub negative_log_likelihood: f64,
    /// Set when no start improved and the variance-targeting fallback was used.
    pub degraded: bool,
    /// Set when the constant-variance model was kept because the likelihood
    /// gain of the full model was below [`NULL_MODEL_LR_THRESHOLD`].
    pub restricted: bool,
}

impl GarchFit {
    fn from_params(params: GarchParams, returns: &[f64], init: f64, degraded: bool, restricted: bool) -> Self {
        let sigma2_path = garch_variance_path(params, returns, init);
        let last = *returns.last().expect("window is non-empty");
        let last_sq_return = last * last;
        let last_s2 = *sigma2_path.last().expect("window is non-empty");
        Self {
            params,
            one_step_forecast: params.next_variance(last, last_s2),
            negative_log_likelihood: garch_nll(params, returns, init),
            sigma2_path,
            last_sq_return,
            degraded,
            restricted,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GarchFitOptions {
    /// Previous fit to add as a start (rolling refits).
    pub warm_start: Option<GarchParams>,
    /// Skip the fixed starts when a warm start is given.
    pub warm_start_only: bool,
    pub simplex: Option<SimplexOptions>,
}

/// `(tau, lambda)` of the fixed starts; `omega` targets the sample variance.
const FIXED_STARTS: [(f64, f64); 3] = [(0.05, 0.90), (0.10, 0.80), (0.20, 0.50)];

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Quasi-MLE fit over the window `returns` by simplex search.
pub fn garch_fit(returns: &[f64], opts: &GarchFitOptions) -> Result<GarchFit> {
    if returns.len() < MIN_FIT_WINDOW {
        return Err(Error::StreamTooShort {
            required: MIN_FIT_WINDOW,
            got: returns.len(),
        });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(invalid("returns must be finite"));
    }
    let var = sample_variance(returns);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Degenerate("returns have zero sample variance".into()));
    }

    // Search over (omega / var, tau, lambda) so the box is scale-free.
    let lower = [1e-8 / var, 0.0, 0.0];
    let upper = [10.0, PERSISTENCE_CAP, PERSISTENCE_CAP];
    let objective = |x: &[f64]| {
        if x[1] + x[2] > PERSISTENCE_CAP {
            return f64::INFINITY;
        }
        let p = GarchParams {
            omega: x[0] * var,
            tau: x[1],
            lambda: x[2],
        };
        garch_nll(p, returns, var)
    };
    let simplex_opts = opts.simplex.clone().unwrap_or(SimplexOptions {
        max_iter: 1000,
        f_tol: 1e-9,
        x_tol: 1e-7,
    });

    let mut starts: Vec<[f64; 3]> = Vec::new();
    if let Some(w) = opts.warm_start {
        starts.push([(w.omega / var).clamp(lower[0], upper[0]), w.tau, w.lambda]);
    }
    if opts.warm_start.is_none() || !opts.warm_start_only {
        for (tau, lambda) in FIXED_STARTS {
            starts.push([1.0 - tau - lambda, tau, lambda]);
        }
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in &starts {
        let f0 = objective(x0);
        let step = [0.5 * x0[0].max(1e-3), 0.05, 0.05];
        let mut r = minimize(objective, x0, &step, &lower, &upper, &simplex_opts);
        // One restart from the optimum guards against a collapsed simplex.
        if r.f.is_finite() {
            let step2 = [0.1 * r.x[0].max(1e-3), 0.02, 0.02];
            let r2 = minimize(objective, &r.x, &step2, &lower, &upper, &simplex_opts);
            if r2.f < r.f {
                r = r2;
            }
        }
        let improved = r.f.is_finite() && (!f0.is_finite() || r.f < f0);
        if improved && best.as_ref().is_none_or(|(_, bf)| r.f < *bf) {
            best = Some((r.x, r.f));
        }
    }

    let null = GarchParams {
        omega: var,
        tau: 0.0,
        lambda: 0.0,
    };
    match best {
        Some((x, f)) => {
            if garch_nll(null, returns, var) - f < NULL_MODEL_LR_THRESHOLD {
                return Ok(GarchFit::from_params(null, returns, var, false, true));
            }
            let params = GarchParams {
                omega: x[0] * var,
                tau: x[1],
                lambda: x[2],
            };
            Ok(GarchFit::from_params(params, returns, var, false, false))
        }
        None => {
            log::warn!("GARCH fit did not improve on any start; using variance targeting");
            Ok(GarchFit::from_params(null, returns, var, true, false))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingForecasts {
    /// First index of `returns` that received a forecast (the window length).
    pub start: usize,
    /// `forecasts[j]` predicts `sigma2` at index `start + j`.
    pub forecasts: Vec<f64>,
    pub refits: usize,
    pub degraded_fits: usize,
}

/// One-step variance forecasts over `returns` from rolling windows of length
/// `window`, refitting every `stride` steps and propagating the last fit's
/// recursion in between.
pub fn rolling_garch_forecasts(returns: &[f64], window: usize, stride: usize) -> Result<RollingForecasts> {
    if stride == 0 {
        return Err(invalid("refit stride must be positive"));
    }
    if window < MIN_FIT_WINDOW {
        return Err(invalid(format!("GARCH window must be at least {MIN_FIT_WINDOW}")));
    }
    if returns.len() <= window {
        return Err(Error::StreamTooShort {
            required: window + 1,
            got: returns.len(),
        });
    }
    let mut forecasts = Vec::with_capacity(returns.len() - window);
    let mut refits = 0;
    let mut degraded_fits = 0;
    let mut current: Option<GarchParams> = None;
    let mut prev_forecast = 0.0;
    for t in window..returns.len() {
        let f = if (t - window).is_multiple_of(stride) {
            let opts = GarchFitOptions {
                warm_start: current,
                warm_start_only: false,
                simplex: None,
            };
            let fit = garch_fit(&returns[t - window..t], &opts)?;
            refits += 1;
            if fit.degraded {
                degraded_fits += 1;
            }
            current = Some(fit.params);
            fit.one_step_forecast
        } else {
            let p = current.expect("first step always refits");
            p.next_variance(returns[t - 1], prev_forecast)
        };
        prev_forecast = f;
        forecasts.push(f);
    }
    Ok(RollingForecasts {
        start: window,
        forecasts,
        refits,
        degraded_fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(o: f64, t: f64, l: f64) -> GarchParams {
        GarchParams::new(o, t, l).unwrap()
    }

    #[test]
    fn stationary_variance_and_recursion() {
        assert!((p(0.05, 0.1, 0.85).unconditional_variance().unwrap() - 1.0).abs() < 1e-12);
        let q = p(0.1, 0.2, 0.7);
        assert!((q.next_variance(2f64.sqrt(), 1.5) - 1.55).abs() < 1e-12);
        assert!(GarchParams::new(0.0, 0.1, 0.1).is_err());
        assert!(GarchParams::new(0.1, -0.1, 0.1).is_err());
    }

    #[test]
    fn simulate_first_variance_and_errors() {
        let path = garch_simulate(p(0.05, 0.1, 0.85), 10, 1).unwrap();
        assert!((path.sigma2[0] - 1.0).abs() < 1e-12);
        assert!(garch_simulate(p(0.05, 0.5, 0.6), 10, 1).is_err());
        // Explicit init works for non-stationary parameters.
        assert!(garch_simulate_with(p(0.05, 0.5, 0.6), &[0.1; 5], 1.0).is_ok());
    }

    #[test]
    fn zero_innovations_converge() {
        let q = p(0.1, 0.2, 0.7);
        let path = garch_simulate_with(q, &[0.0; 500], 5.0).unwrap();
        let limit = 0.1 / (1.0 - 0.7);
        assert!((path.sigma2[499] - limit).abs() < 1e-9);
        assert!(path.returns.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn nll_examples() {
        let q = p(0.1, 0.1, 0.1);
        assert_eq!(garch_nll(q, &[0.0], 1.0), 0.0);
        assert!((garch_nll(q, &[1.0], 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(garch_nll(GarchParams { omega: -1.0, tau: 0.1, lambda: 0.1 }, &[1.0], 1.0), f64::INFINITY);
        assert_eq!(garch_nll(GarchParams { omega: 1.0, tau: 0.5, lambda: 0.5 }, &[1.0], 1.0), f64::INFINITY);
    }

    #[test]
    fn simulation_likelihood_consistency() {
        let q = p(0.05, 0.1, 0.85);
        let path = garch_simulate(q, 2000, 8).unwrap();
        let init = q.unconditional_variance().unwrap();
        let rebuilt = garch_variance_path(q, &path.returns, init);
        for (a, b) in rebuilt.iter().zip(&path.sigma2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn fit_recovers_truth() {
        let q = p(0.05, 0.1, 0.85);
        let path = garch_simulate(q, 5000, 21).unwrap();
        let fit = garch_fit(&path.returns, &GarchFitOptions::default()).unwrap();
        assert!(!fit.degraded);
        let g = fit.params;
        assert!((g.omega - 0.05).abs() < 0.05, "{g:?}");
        assert!((g.tau - 0.1).abs() < 0.05, "{g:?}");
        assert!((g.lambda - 0.85).abs() < 0.05, "{g:?}");
        assert!(g.persistence() <= PERSISTENCE_CAP);
        let var = sample_variance(&path.returns);
        assert!(garch_nll(q, &path.returns, var) >= fit.negative_log_likelihood - 1e-6);
        assert!(fit.sigma2_path.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn forecast_identity() {
        let path = garch_simulate(p(0.05, 0.1, 0.85), 1000, 4).unwrap();
        let fit = garch_fit(&path.returns, &GarchFitOptions::default()).unwrap();
        let g = fit.params;
        let s_last = *fit.sigma2_path.last().unwrap();
        let recomputed = g.omega + g.tau * fit.last_sq_return + g.lambda * s_last;
        assert!((fit.one_step_forecast - recomputed).abs() <= 1e-12 * recomputed);
    }

    #[test]
    fn iid_normal_fit() {
        let mut rng = StreamRng::new(5, 0);
        let r: Vec<f64> = (0..5000).map(|_| rng.standard_normal()).collect();
        let fit = garch_fit(&r, &GarchFitOptions::default()).unwrap();
        let g = fit.params;
        assert!(fit.restricted);
        assert!(g.tau + g.lambda <= 0.2, "{g:?}");
        assert!((0.8..=1.2).contains(&g.omega), "{g:?}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(garch_fit(&[0.0; 200], &GarchFitOptions::default()), Err(Error::Degenerate(_))));
        assert!(matches!(garch_fit(&[1.0; 50], &GarchFitOptions::default()), Err(Error::StreamTooShort { .. })));
    }

    #[test]
    fn rolling_forecasts_propagate_between_refits() {
        let q = p(0.05, 0.1, 0.85);
        let path = garch_simulate(q, 400, 2).unwrap();
        let roll = rolling_garch_forecasts(&path.returns, 200, 5).unwrap();
        assert_eq!(roll.forecasts.len(), 200);
        assert_eq!(roll.refits, 40);
        assert!(roll.forecasts.iter().all(|&f| f > 0.0));
        assert!(rolling_garch_forecasts(&path.returns, 200, 0).is_err());
        assert!(rolling_garch_forecasts(&path.returns[..200], 200, 1).is_err());
    }
}
