//! Single-series and panel experiment runners.

use std::collections::BTreeMap;

use super::config::{Algorithm, ExperimentConfig};
use super::metrics::{compute_metrics, CoverageReport, IntervalFlag, IntervalRecord, RunCounters, StepRecord};
use crate::aci::AciState;
use crate::conformal::{
    compute_beta, empirical_quantile, interval_from_quantile, BetaValue, PredictionInterval, ScoreKind, ScoreWindow,
};
use crate::error::{Error, Result};
use crate::faci::{EnsembleState, Output};
use crate::forecasters::{conformity_score, panel_score, PanelRow};
use crate::rng::{streams, StreamRng};

/// One row of a `t,y,point_pred[,scale]` series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: u64,
    pub y: f64,
    pub point: f64,
    pub scale: Option<f64>,
}

/// What drives an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamInput {
    /// `(t, beta_t)` supplied directly.
    Betas(Vec<(u64, BetaValue)>),
    /// `(t, score_t)`; `beta_t` comes from the trailing score window.
    Scores(Vec<(u64, f64)>),
    /// Outcomes and point predictions scored with the configured kind.
    Series(Vec<SeriesRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub report: CoverageReport,
}

struct Outcome {
    err: bool,
    eta: Option<f64>,
    selected: Option<usize>,
}

/// The configured learner plus its private random stream.
pub struct Learner {
    kind: LearnerKind,
    rng: Option<StreamRng>,
    draw: f64,
}

enum LearnerKind {
    Aci(AciState),
    Faci(Box<EnsembleState>, Output),
    Fixed(f64),
    Bernoulli(f64),
}

impl Learner {
    /// `stream` selects the random stream for selection or baseline draws.
    pub fn new(cfg: &ExperimentConfig, stream: u64) -> Result<Self> {
        let target = cfg.target()?;
        let (kind, uses_rng) = match cfg.algorithm {
            Algorithm::Aci => {
                let init = cfg.alpha_init.unwrap_or(cfg.alpha);
                (LearnerKind::Aci(AciState::with_init(target, cfg.aci_gamma()?, init)?), false)
            }
            Algorithm::FaciAveraged | Algorithm::FaciRandomized => {
                let out = if cfg.algorithm == Algorithm::FaciAveraged {
                    Output::Averaged
                } else {
                    Output::Randomized
                };
                let ens = EnsembleState::new(cfg.ensemble()?)?;
                (LearnerKind::Faci(Box::new(ens), out), out == Output::Randomized)
            }
            Algorithm::FixedAlpha => (LearnerKind::Fixed(cfg.alpha), false),
            Algorithm::Bernoulli => (LearnerKind::Bernoulli(cfg.alpha), true),
        };
        Ok(Self {
            kind,
            rng: uses_rng.then(|| StreamRng::new(cfg.seed, stream)),
            draw: 0.0,
        })
    }

    /// Draws this step's randomness and returns the emitted level.
    pub fn begin(&mut self) -> f64 {
        if let Some(rng) = self.rng.as_mut() {
            self.draw = rng.uniform();
        }
        match &self.kind {
            LearnerKind::Aci(s) => s.alpha_t,
            LearnerKind::Faci(e, Output::Averaged) => e.alpha_bar(),
            LearnerKind::Faci(e, Output::Randomized) => e.experts()[e.select(self.draw)].alpha,
            LearnerKind::Fixed(a) | LearnerKind::Bernoulli(a) => *a,
        }
    }

    pub fn expert_alphas(&self) -> Option<Vec<f64>> {
        match &self.kind {
            LearnerKind::Faci(e, _) => Some(e.expert_alphas()),
            _ => None,
        }
    }

    fn finish(&mut self, beta: BetaValue, level: f64) -> Result<Outcome> {
        Ok(match &mut self.kind {
            LearnerKind::Aci(s) => {
                let err = s.err(beta);
                *s = s.step(err);
                Outcome {
                    err,
                    eta: None,
                    selected: None,
                }
            }
            LearnerKind::Faci(e, out) => {
                let step = e.step(beta, *out, self.draw)?;
                debug_assert_eq!(step.alpha_t.to_bits(), level.to_bits());
                Outcome {
                    err: step.err,
                    eta: Some(step.eta),
                    selected: step.selected,
                }
            }
            LearnerKind::Fixed(a) => Outcome {
                err: beta.get() < *a,
                eta: None,
                selected: None,
            },
            LearnerKind::Bernoulli(a) => Outcome {
                err: self.draw < *a,
                eta: None,
                selected: None,
            },
        })
    }

    fn is_bernoulli(&self) -> bool {
        matches!(self.kind, LearnerKind::Bernoulli(_))
    }
}

fn interval_record(iv: std::result::Result<PredictionInterval, Error>) -> Result<IntervalRecord> {
    match iv {
        Ok(iv) => {
            let flag = if iv.empty {
                IntervalFlag::Empty
            } else if iv.width.is_infinite() {
                IntervalFlag::Unbounded
            } else {
                IntervalFlag::Bounded
            };
            Ok(IntervalRecord {
                lo: iv.lo,
                hi: iv.hi,
                width: iv.width,
                flag,
            })
        }
        Err(Error::UnboundedRelativeSet(_)) => Ok(IntervalRecord {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            width: f64::INFINITY,
            flag: IntervalFlag::Unbounded,
        }),
        Err(e) => Err(e),
    }
}

struct Scored {
    t: u64,
    score: f64,
    point: f64,
    aux: Option<f64>,
}

fn score_rows(cfg: &ExperimentConfig, input: &StreamInput) -> Result<Option<Vec<Scored>>> {
    Ok(match input {
        StreamInput::Betas(_) => None,
        StreamInput::Scores(rows) => Some(
            rows.iter()
                .map(|&(t, s)| {
                    if s.is_nan() {
                        return Err(crate::error::invalid(format!("score at t = {t} is NaN")));
                    }
                    Ok(Scored {
                        t,
                        score: s,
                        point: 0.0,
                        aux: None,
                    })
                })
                .collect::<Result<_>>()?,
        ),
        StreamInput::Series(rows) => Some(
            rows.iter()
                .map(|r| {
                    Ok(Scored {
                        t: r.t,
                        score: conformity_score(cfg.score_kind, r.y, r.point, r.scale)?,
                        point: r.point,
                        aux: r.scale,
                    })
                })
                .collect::<Result<_>>()?,
        ),
    })
}

/// Runs one configured learner over `input`.
///
/// Score-driven inputs spend the first `window` rows filling the score window
/// and record nothing for them.
pub fn run_experiment(cfg: &ExperimentConfig, input: &StreamInput) -> Result<RunOutput> {
    cfg.validate()?;
    let stream = if cfg.algorithm == Algorithm::Bernoulli {
        streams::BERNOULLI
    } else {
        streams::SELECTION
    };
    let mut learner = Learner::new(cfg, stream)?;
    let mut counters = RunCounters::default();
    let mut records = Vec::new();

    match score_rows(cfg, input)? {
        None => {
            let StreamInput::Betas(rows) = input else { unreachable!() };
            records.reserve(rows.len());
            for &(t, beta) in rows {
                let experts = cfg.record_experts.then(|| learner.expert_alphas()).flatten();
                let level = learner.begin();
                let o = learner.finish(beta, level)?;
                records.push(StepRecord {
                    t,
                    unit: None,
                    alpha_t: level,
                    beta_t: beta.get(),
                    err_t: o.err,
                    covered: None,
                    interval: None,
                    eta_t: o.eta,
                    selected_expert: o.selected,
                    expert_alphas: experts,
                });
            }
        }
        Some(rows) => {
            let w = cfg.window;
            if rows.len() <= w {
                return Err(Error::StreamTooShort {
                    required: w + 1,
                    got: rows.len(),
                });
            }
            let interval_kind = match input {
                StreamInput::Scores(_) => ScoreKind::Absolute,
                _ => cfg.score_kind,
            };
            let mut window = ScoreWindow::from_scores(w, rows[..w].iter().map(|r| r.score))?;
            records.reserve(rows.len() - w);
            for r in &rows[w..] {
                let experts = cfg.record_experts.then(|| learner.expert_alphas()).flatten();
                let level = learner.begin();
                let q = empirical_quantile(1.0 - level, &window)?;
                let interval = match input {
                    // Score streams have no outcome scale; report the score set [0, q].
                    StreamInput::Scores(_) => interval_record(interval_from_quantile(0.0, q, interval_kind, None))
                        .map(|mut iv| {
                            if iv.flag == IntervalFlag::Bounded {
                                iv.lo = 0.0;
                                iv.width = iv.hi;
                            }
                            iv
                        })?,
                    _ => interval_record(interval_from_quantile(r.point, q, interval_kind, r.aux))?,
                };
                let beta = compute_beta(r.score, &window)?;
                let covered = r.score <= q;
                let o = learner.finish(beta, level)?;
                if !learner.is_bernoulli() && covered == o.err {
                    counters.tie_steps += 1;
                }
                window.push(r.score)?;
                records.push(StepRecord {
                    t: r.t,
                    unit: None,
                    alpha_t: level,
                    beta_t: beta.get(),
                    err_t: o.err,
                    covered: Some(covered),
                    interval: Some(interval),
                    eta_t: o.eta,
                    selected_expert: o.selected,
                    expert_alphas: experts,
                });
            }
        }
    }

    let report = compute_metrics(&records, cfg.bins, cfg.min_bin_count, cfg.single_local_window(), counters);
    Ok(RunOutput { records, report })
}

/// Per-unit learners on a pooled cross-sectional score window.
///
/// The quantile pool at a time step holds every valid unit score of the
/// previous time step present in the data. Units absent at a step, or with an
/// undefined relative score, keep their state untouched.
pub fn run_panel(cfg: &ExperimentConfig, rows: &[PanelRow]) -> Result<RunOutput> {
    cfg.validate()?;
    let mut by_time: BTreeMap<u64, Vec<&PanelRow>> = BTreeMap::new();
    for r in rows {
        by_time.entry(r.t).or_default().push(r);
    }
    let mut units: Vec<&str> = rows.iter().map(|r| r.unit.as_str()).collect();
    units.sort_unstable();
    units.dedup();
    let index: BTreeMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let mut learners = units
        .iter()
        .enumerate()
        .map(|(i, _)| Learner::new(cfg, streams::PANEL_LEARNER_BASE + i as u64))
        .collect::<Result<Vec<_>>>()?;

    let mut counters = RunCounters::default();
    let mut records = Vec::new();
    let mut pool: Option<ScoreWindow> = None;
    for (&t, step_rows) in &by_time {
        let mut scored: Vec<(&PanelRow, f64)> = Vec::with_capacity(step_rows.len());
        let mut seen = std::collections::BTreeSet::new();
        for r in step_rows {
            if !seen.insert(r.unit.as_str()) {
                return Err(crate::error::invalid(format!("duplicate row for unit {} at t = {t}", r.unit)));
            }
            match panel_score(r.y, r.y_hat, r.y_lag) {
                Ok(s) => scored.push((r, s)),
                Err(Error::UndefinedRelativeScore) => counters.skipped_rows += 1,
                Err(e) => return Err(e),
            }
        }
        scored.sort_by(|a, b| a.0.unit.cmp(&b.0.unit));

        match pool.as_ref() {
            Some(window) if !window.is_empty() => {
                for &(r, s) in &scored {
                    let learner = &mut learners[index[r.unit.as_str()]];
                    let experts = cfg.record_experts.then(|| learner.expert_alphas()).flatten();
                    let level = learner.begin();
                    let q = empirical_quantile(1.0 - level, window)?;
                    let interval = interval_record(interval_from_quantile(r.y_hat, q, ScoreKind::Relative, Some(r.y_lag)))?;
                    let beta = compute_beta(s, window)?;
                    let covered = s <= q;
                    let o = learner.finish(beta, level)?;
                    if !learner.is_bernoulli() && covered == o.err {
                        counters.tie_steps += 1;
                    }
                    records.push(StepRecord {
                        t,
                        unit: Some(r.unit.clone()),
                        alpha_t: level,
                        beta_t: beta.get(),
                        err_t: o.err,
                        covered: Some(covered),
                        interval: Some(interval),
                        eta_t: o.eta,
                        selected_expert: o.selected,
                        expert_alphas: experts,
                    });
                }
            }
            _ => {
                if pool.is_some() {
                    log::warn!("empty cross-section before t = {t}; step skipped");
                }
                counters.skipped_steps += 1;
            }
        }

        pool = if scored.is_empty() {
            Some(ScoreWindow::new(1)?)
        } else {
            Some(ScoreWindow::from_scores(scored.len(), scored.iter().map(|&(_, s)| s))?)
        };
    }

    let report = compute_metrics(&records, cfg.bins, cfg.min_bin_count, cfg.panel_local_window(), counters);
    Ok(RunOutput { records, report })
}
