//! Per-step records and the coverage summary computed from them.

use serde::Serialize;

/// How the prediction set of a step came out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalFlag {
    Bounded,
    Empty,
    /// The whole line (`alpha_t <= 0`, or a relative quantile `>= 1`).
    Unbounded,
}

impl IntervalFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::Empty => "empty",
            Self::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalRecord {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub flag: IntervalFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    /// Panel unit, if any.
    pub unit: Option<String>,
    pub alpha_t: f64,
    pub beta_t: f64,
    pub err_t: bool,
    /// Set membership of the realized score (score mode only).
    pub covered: Option<bool>,
    pub interval: Option<IntervalRecord>,
    pub eta_t: Option<f64>,
    pub selected_expert: Option<usize>,
    pub expert_alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalPoint {
    pub t: u64,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinReport {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `1 - mean(err)` within the bin.
    pub coverage: f64,
    pub err_mean: f64,
    pub bar_lo: f64,
    pub bar_hi: f64,
}

/// Counters gathered while running, copied into the report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunCounters {
    /// Steps where set membership and `err_t` disagree (score ties).
    pub tie_steps: usize,
    /// Panel rows dropped for an undefined relative score.
    pub skipped_rows: usize,
    /// Panel steps skipped for an empty cross-section.
    pub skipped_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub steps: usize,
    pub global_coverage: f64,
    pub global_miscoverage: f64,
    pub local_window: usize,
    pub local_coverage: Vec<LocalPoint>,
    pub bins: usize,
    pub min_bin_count: usize,
    pub conditional: Vec<BinReport>,
    /// Non-empty bins with fewer than `min_bin_count` steps.
    pub dropped_bins: usize,
    /// Over bounded, non-empty sets only.
    pub mean_width: Option<f64>,
    pub median_width: Option<f64>,
    pub unbounded_sets: usize,
    pub empty_sets: usize,
    #[serde(flatten)]
    pub counters: RunCounters,
}

impl CoverageReport {
    pub fn local_min(&self) -> Option<f64> {
        self.local_coverage.iter().map(|p| p.coverage).reduce(f64::min)
    }

    pub fn local_max(&self) -> Option<f64> {
        self.local_coverage.iter().map(|p| p.coverage).reduce(f64::max)
    }
}

/// `p +- 1.96 sqrt(p (1 - p) / n)`, truncated to `[0, 1]`.
pub fn error_bar(p: f64, n: usize) -> (f64, f64) {
    let h = 1.96 * (p * (1.0 - p) / n as f64).sqrt();
    ((p - h).max(0.0), (p + h).min(1.0))
}

/// Local coverage over centered windows of `L` time steps,
/// `t - L/2 + 1 ..= t + L/2`, reported only where the window fits inside the
/// observed time range. Records sharing a time step (panel units) are pooled.
pub fn local_coverage(records: &[StepRecord], local_window: usize) -> Vec<LocalPoint> {
    if records.is_empty() || local_window == 0 {
        return Vec::new();
    }
    let t_min = records.iter().map(|r| r.t).min().expect("non-empty");
    let t_max = records.iter().map(|r| r.t).max().expect("non-empty");
    let span = (t_max - t_min + 1) as usize;
    let half = local_window / 2;
    if span < local_window {
        return Vec::new();
    }
    let mut errs = vec![0u64; span + 1];
    let mut counts = vec![0u64; span + 1];
    for r in records {
        let i = (r.t - t_min) as usize + 1;
        errs[i] += u64::from(r.err_t);
        counts[i] += 1;
    }
    for i in 1..=span {
        errs[i] += errs[i - 1];
        counts[i] += counts[i - 1];
    }
    // Offset i covers i - half + 1 ..= i + half.
    let mut out = Vec::with_capacity(span + 1 - local_window);
    for i in (half - 1)..(span - half) {
        let (a, b) = (i + 1 - half, i + half + 1);
        let n = counts[b] - counts[a];
        if n == 0 {
            continue;
        }
        let e = errs[b] - errs[a];
        out.push(LocalPoint {
            t: t_min + i as u64,
            coverage: 1.0 - e as f64 / n as f64,
        });
    }
    out
}

/// Bins `alpha_t` into `bins` equal cells of `[0, 1]`; levels outside land in
/// the end cells.
pub fn conditional_coverage(records: &[StepRecord], bins: usize, min_count: usize) -> (Vec<BinReport>, usize) {
    let mut counts = vec![0usize; bins];
    let mut errs = vec![0usize; bins];
    for r in records {
        let b = ((r.alpha_t * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
        errs[b] += usize::from(r.err_t);
    }
    let mut out = Vec::new();
    let mut dropped = 0;
    for b in 0..bins {
        let n = counts[b];
        if n == 0 {
            continue;
        }
        if n < min_count {
            dropped += 1;
            continue;
        }
        let err_mean = errs[b] as f64 / n as f64;
        let coverage = 1.0 - err_mean;
        let (bar_lo, bar_hi) = error_bar(coverage, n);
        out.push(BinReport {
            lo: b as f64 / bins as f64,
            hi: (b + 1) as f64 / bins as f64,
            count: n,
            coverage,
            err_mean,
            bar_lo,
            bar_hi,
        });
    }
    (out, dropped)
}

pub fn compute_metrics(
    records: &[StepRecord],
    bins: usize,
    min_bin_count: usize,
    local_window: usize,
    counters: RunCounters,
) -> CoverageReport {
    let n = records.len();
    let errs = records.iter().filter(|r| r.err_t).count();
    let global_miscoverage = if n == 0 { 0.0 } else { errs as f64 / n as f64 };
    let (conditional, dropped_bins) = conditional_coverage(records, bins.max(1), min_bin_count);

    let mut widths: Vec<f64> = Vec::new();
    let (mut unbounded_sets, mut empty_sets) = (0, 0);
    for iv in records.iter().filter_map(|r| r.interval) {
        match iv.flag {
            IntervalFlag::Bounded => widths.push(iv.width),
            IntervalFlag::Empty => empty_sets += 1,
            IntervalFlag::Unbounded => unbounded_sets += 1,
        }
    }
    let mean_width = (!widths.is_empty()).then(|| widths.iter().sum::<f64>() / widths.len() as f64);
    widths.sort_by(f64::total_cmp);
    let median_width = (!widths.is_empty()).then(|| {
        let m = widths.len() / 2;
        if widths.len() % 2 == 1 {
            widths[m]
        } else {
            0.5 * (widths[m - 1] + widths[m])
        }
    });

    CoverageReport {
        steps: n,
        global_coverage: 1.0 - global_miscoverage,
        global_miscoverage,
        local_window,
        local_coverage: local_coverage(records, local_window),
        bins,
        min_bin_count,
        conditional,
        dropped_bins,
        mean_width,
        median_width,
        unbounded_sets,
        empty_sets,
        counters,
    }
}
