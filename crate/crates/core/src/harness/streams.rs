//! Synthetic `beta_t` streams with a known oracle level `alpha*_t`.

use serde::{Deserialize, Serialize};

use crate::conformal::BetaValue;
use crate::error::{invalid, Result};
use crate::rng::{streams, StreamRng};

/// How `beta` is drawn within a segment. Each law puts mass `alpha` below
/// `alpha*`, so `alpha*` is the `alpha`-quantile of `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    /// Uniform pushed through the piecewise-linear CDF with knot `(alpha*, alpha)`.
    #[default]
    Warp,
    /// `min(1, U alpha* / alpha)`.
    Scale,
    /// `U` itself; only valid when `alpha* = alpha`.
    Uniform,
}

impl std::str::FromStr for NoiseLaw {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "warp" => Ok(Self::Warp),
            "scale" => Ok(Self::Scale),
            "uniform" => Ok(Self::Uniform),
            other => Err(invalid(format!("unknown noise law '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: usize,
    pub alpha_star: f64,
    #[serde(default)]
    pub law: NoiseLaw,
}

/// One generated step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleStep {
    pub beta: BetaValue,
    pub alpha_star: f64,
}

fn draw(law: NoiseLaw, u: f64, alpha_star: f64, alpha: f64) -> f64 {
    match law {
        NoiseLaw::Uniform => u,
        NoiseLaw::Scale => (u * alpha_star / alpha).min(1.0),
        NoiseLaw::Warp => {
            if u < alpha {
                u * alpha_star / alpha
            } else {
                alpha_star + (u - alpha) * (1.0 - alpha_star) / (1.0 - alpha)
            }
        }
    }
}

/// Concatenates the segments, drawing from the `beta` stream of `seed`.
pub fn generate_beta_stream(segments: &[Segment], alpha: f64, seed: u64) -> Result<Vec<OracleStep>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("target alpha must lie in (0, 1), got {alpha}")));
    }
    for (i, s) in segments.iter().enumerate() {
        if !(s.alpha_star > 0.0 && s.alpha_star < 1.0) {
            return Err(invalid(format!(
                "segment {i}: alpha_star must lie in (0, 1), got {}",
                s.alpha_star
            )));
        }
        if s.law == NoiseLaw::Uniform && s.alpha_star != alpha {
            return Err(invalid(format!(
                "segment {i}: the uniform law needs alpha_star = alpha = {alpha}"
            )));
        }
    }
    let mut rng = StreamRng::new(seed, streams::BETA);
    let total: usize = segments.iter().map(|s| s.length).sum();
    let mut out = Vec::with_capacity(total);
    for s in segments {
        for _ in 0..s.length {
            let b = draw(s.law, rng.uniform(), s.alpha_star, alpha);
            out.push(OracleStep {
                beta: BetaValue::new(b.clamp(0.0, 1.0))?,
                alpha_star: s.alpha_star,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::path_length;

    fn seg(length: usize, alpha_star: f64, law: NoiseLaw) -> Segment {
        Segment { length, alpha_star, law }
    }

    fn mass_below(xs: &[OracleStep], x: f64) -> f64 {
        xs.iter().filter(|s| s.beta.get() < x).count() as f64 / xs.len() as f64
    }

    #[test]
    fn uniform_segment() {
        let s = generate_beta_stream(&[seg(100_000, 0.1, NoiseLaw::Uniform)], 0.1, 1).unwrap();
        assert!((mass_below(&s, 0.1) - 0.1).abs() < 0.005);
        assert!(generate_beta_stream(&[seg(10, 0.2, NoiseLaw::Uniform)], 0.1, 1).is_err());
    }

    fn empirical_quantile(xs: &[OracleStep], level: f64) -> f64 {
        let mut v: Vec<f64> = xs.iter().map(|s| s.beta.get()).collect();
        v.sort_by(f64::total_cmp);
        v[((level * v.len() as f64).ceil() as usize).max(1) - 1]
    }

    #[test]
    fn warp_quantiles_match_oracle() {
        let n = 100_000;
        let s = generate_beta_stream(&[seg(n, 0.05, NoiseLaw::Warp), seg(n, 0.2, NoiseLaw::Warp)], 0.1, 7).unwrap();
        assert!((empirical_quantile(&s[..n], 0.1) - 0.05).abs() < 0.01);
        assert!((empirical_quantile(&s[n..], 0.1) - 0.2).abs() < 0.01);
    }

    #[test]
    fn scale_law_miscoverage() {
        let n = 100_000;
        let s = generate_beta_stream(&[seg(n, 0.05, NoiseLaw::Scale)], 0.1, 3).unwrap();
        assert!((mass_below(&s, 0.05) - 0.1).abs() < 0.005);
        assert!((mass_below(&s, 0.1) - 0.2).abs() < 0.005);
    }

    #[test]
    fn oracle_path_length() {
        let s = generate_beta_stream(
            &[seg(50, 0.05, NoiseLaw::Warp), seg(50, 0.2, NoiseLaw::Warp), seg(50, 0.1, NoiseLaw::Scale)],
            0.1,
            3,
        )
        .unwrap();
        let a: Vec<f64> = s.iter().map(|x| x.alpha_star).collect();
        assert!((path_length(&a).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_segment() {
        assert!(generate_beta_stream(&[seg(10, 0.0, NoiseLaw::Warp)], 0.1, 1).is_err());
        assert!(generate_beta_stream(&[seg(10, 1.0, NoiseLaw::Warp)], 0.1, 1).is_err());
    }

    #[test]
    fn deterministic() {
        let a = generate_beta_stream(&[seg(100, 0.1, NoiseLaw::Warp)], 0.1, 5).unwrap();
        let b = generate_beta_stream(&[seg(100, 0.1, NoiseLaw::Warp)], 0.1, 5).unwrap();
        assert_eq!(a, b);
    }
}
