use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use faci::forecasters::{garch_simulate, panel_forecasts, rolling_garch_forecasts, simulate_panel, PanelModelSpec};
use faci::harness::{
    compute_metrics, evaluate_bounds, generate_beta_stream, io, run_experiment, run_panel, ExperimentConfig,
    RunCounters, RunOutput, SeriesRow, StreamInput,
};
use faci::{Error, Result};

#[derive(Parser)]
#[command(name = "faci", version, about = "Online conformal prediction intervals with adaptive miscoverage levels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic beta streams, GARCH series or panels.
    Simulate(Common),
    /// Run one learner over a beta, score or series CSV.
    Run {
        #[command(flatten)]
        common: Common,
        /// Input CSV (defaults to the configured `input`, then to `segments`).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run per-unit learners over a `t,unit,y,y_hat,y_lag` panel.
    Panel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Recompute `report.json` from a `steps.csv`.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate the theoretical bounds for the configured grid and schedule.
    Bounds(Common),
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn input_path(flag: &Option<PathBuf>, cfg: &ExperimentConfig) -> Option<PathBuf> {
    flag.clone().or_else(|| cfg.input.clone())
}

fn write_run(out: &Path, run: &RunOutput) -> Result<()> {
    io::write_steps(&out.join("steps.csv"), &run.records)?;
    io::write_json(&out.join("report.json"), &run.report)?;
    println!(
        "steps {}  coverage {:.4}  local [{}, {}]",
        run.report.steps,
        run.report.global_coverage,
        run.report.local_min().map_or("-".into(), |v| format!("{v:.4}")),
        run.report.local_max().map_or("-".into(), |v| format!("{v:.4}")),
    );
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let mut wrote = false;
    if !cfg.segments.is_empty() {
        let steps = generate_beta_stream(&cfg.segments, cfg.alpha, cfg.seed)?;
        io::write_beta_stream(&out.join("beta.csv"), &steps)?;
        wrote = true;
    }
    if let Some(g) = &cfg.garch {
        let path = garch_simulate(g.params, g.length, cfg.seed)?;
        let roll = rolling_garch_forecasts(&path.returns, g.fit_window, g.refit_stride)?;
        if roll.degraded_fits > 0 {
            log::warn!("{} of {} GARCH fits fell back to variance targeting", roll.degraded_fits, roll.refits);
        }
        let rows: Vec<SeriesRow> = roll
            .forecasts
            .iter()
            .enumerate()
            .map(|(j, &f)| {
                let t = roll.start + j;
                let r = path.returns[t];
                SeriesRow {
                    t: t as u64 + 1,
                    y: r * r,
                    point: f,
                    scale: None,
                }
            })
            .collect();
        io::write_series(&out.join("series.csv"), &rows)?;
        wrote = true;
    }
    if let Some(p) = &cfg.panel {
        let spec = PanelModelSpec::default();
        let series = simulate_panel(p.units, p.length, spec.horizon, cfg.seed)?;
        io::write_panel(&out.join("panel.csv"), &panel_forecasts(&series, &spec)?)?;
        wrote = true;
    }
    if !wrote {
        return Err(Error::Config("nothing to simulate: set `segments`, `garch` or `panel`".into()));
    }
    Ok(())
}

fn run(cfg: &ExperimentConfig, input: Option<PathBuf>, out: &Path) -> Result<()> {
    let stream = match input {
        Some(p) => io::read_stream(&p)?,
        None if !cfg.segments.is_empty() => {
            let steps = generate_beta_stream(&cfg.segments, cfg.alpha, cfg.seed)?;
            StreamInput::Betas(steps.iter().enumerate().map(|(i, s)| (i as u64 + 1, s.beta)).collect())
        }
        None => return Err(Error::Config("no input: pass --input or set `input` or `segments`".into())),
    };
    write_run(out, &run_experiment(cfg, &stream)?)
}

fn panel(cfg: &ExperimentConfig, input: Option<PathBuf>, out: &Path) -> Result<()> {
    let rows = match (input, &cfg.panel) {
        (Some(p), _) => io::read_panel(&p)?,
        (None, Some(p)) => {
            let spec = PanelModelSpec::default();
            panel_forecasts(&simulate_panel(p.units, p.length, spec.horizon, cfg.seed)?, &spec)?
        }
        (None, None) => return Err(Error::Config("no panel input: pass --input or set `input` or `panel`".into())),
    };
    let run = run_panel(cfg, &rows)?;
    if run.report.counters.skipped_rows > 0 {
        log::info!("{} rows skipped for an undefined relative score", run.report.counters.skipped_rows);
    }
    write_run(out, &run)
}

fn metrics(cfg: &ExperimentConfig, input: &Path, out: &Path) -> Result<()> {
    let records = io::read_steps(input)?;
    let window = if records.iter().any(|r| r.unit.is_some()) {
        cfg.panel_local_window()
    } else {
        cfg.single_local_window()
    };
    let report = compute_metrics(&records, cfg.bins, cfg.min_bin_count, window, RunCounters::default());
    io::write_json(&out.join("report.json"), &report)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => simulate(&load_config(&c)?, &c.out),
        Command::Run { common, input } => {
            let cfg = load_config(&common)?;
            run(&cfg, input_path(&input, &cfg), &common.out)
        }
        Command::Panel { common, input } => {
            let cfg = load_config(&common)?;
            panel(&cfg, input_path(&input, &cfg), &common.out)
        }
        Command::Metrics { common, input } => metrics(&load_config(&common)?, &input, &common.out),
        Command::Bounds(c) => {
            let cfg = load_config(&c)?;
            io::write_json(&c.out.join("bounds.json"), &evaluate_bounds(&cfg, None)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
