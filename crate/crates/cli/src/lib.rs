//! Command-line runner: single strategies, full grid sweeps and synthetic
//! data generation.
//!
//! Every run computes all of its results before touching the output
//! directory, so a failed run leaves nothing behind.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::Parser;
use physmom_core::analytics::{benchmark_window, clip_and_rebase, SeriesStats};
use physmom_core::market_data::Membership;
use physmom_core::portfolio::FormationContext;
use physmom_core::{
    enumerate_grid, formation_ranks, load_panel, risk_report, run_backtest, run_ranked, AssetPanel, RiskReport,
    StrategyConfig, StrategyRegistry, Timescale,
};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{Args, Mode, RunConfig};
use output::GridRow;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            AppError::Data(_) => 2,
            AppError::Runtime(_) => 3,
        }
    }
}

impl From<physmom_core::Error> for AppError {
    fn from(e: physmom_core::Error) -> Self {
        use physmom_core::Error as E;
        match e {
            E::Config(_) | E::Domain(_) | E::InsufficientHistory { .. } => AppError::Config(e.to_string()),
            E::Data(_) | E::MalformedRow { .. } | E::EmptyUniverse(_) | E::Io { .. } | E::Csv { .. } => {
                AppError::Data(e.to_string())
            }
            E::UndefinedBasketReturn { .. } => AppError::Runtime(e.to_string()),
        }
    }
}

/// Loads the panel named by `cfg`, with membership when given.
pub fn load(cfg: &RunConfig) -> Result<AssetPanel, AppError> {
    let panel = load_panel(&cfg.data_dir, &cfg.benchmark, cfg.calendar_policy)?;
    Ok(match &cfg.membership {
        Some(path) => panel.with_membership(Membership::load(path)?),
        None => panel,
    })
}

fn benchmark_series(panel: &AssetPanel) -> Vec<(NaiveDate, f64)> {
    let dates = panel.calendar().dates();
    panel.benchmark_wealth(dates[0], dates[dates.len() - 1])
}

/// Result of one strategy, ready to be written.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub report: RiskReport,
    /// Wealth over the report window, rebased to 1 at its start.
    pub wealth: Vec<(NaiveDate, f64)>,
}

pub fn single(panel: &AssetPanel, config: &StrategyConfig, rf: f64) -> Result<SingleRun, AppError> {
    let result = run_backtest(panel, config)?;
    let window = benchmark_window(config.timescale, panel.calendar());
    let report = risk_report(&result, &benchmark_series(panel), rf, window)?;
    let wealth = clip_and_rebase(&result.wealth, report.window_start, report.window_end);
    Ok(SingleRun { report, wealth })
}

/// Every grid configuration of one timescale, in enumeration order.
#[derive(Debug, Clone)]
pub struct TimescaleSweep {
    pub timescale: Timescale,
    pub rows: Vec<GridRow>,
    /// Window-clipped wealth curves of successful rows, by config id.
    pub wealth: BTreeMap<String, Vec<(NaiveDate, f64)>>,
    pub benchmark: Option<SeriesStats>,
}

impl TimescaleSweep {
    pub fn best(&self) -> Vec<&GridRow> {
        output::best_rows(&self.rows)
    }
}

/// Runs every configuration of `timescale` (both directions) with `groups`
/// rank groups. Rankings are computed once per (momentum, mass, J) and
/// shared across holding periods and directions; the groups run in
/// parallel. A configuration that cannot run (too little history, too few
/// months for a report) becomes an error row.
pub fn sweep(panel: &AssetPanel, timescale: Timescale, groups: usize, rf: f64) -> Result<TimescaleSweep, AppError> {
    let configs: Vec<StrategyConfig> = enumerate_grid(timescale)
        .into_iter()
        .map(|c| StrategyConfig { groups, ..c })
        .collect();
    let ctx = FormationContext::new(panel, timescale);
    let bench = benchmark_series(panel);
    let window = benchmark_window(timescale, panel.calendar());

    let mut families: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (i, c) in configs.iter().enumerate() {
        families.entry((c.momentum, c.mass, c.lookback)).or_default().push(i);
    }
    let families: Vec<Vec<usize>> = families.into_values().collect();

    type Outcome = Result<(RiskReport, Vec<(NaiveDate, f64)>), String>;
    type Cell = (usize, Outcome);
    let cells: Vec<Vec<Cell>> = families
        .par_iter()
        .map(|members| -> Result<Vec<Cell>, AppError> {
            let first = &configs[members[0]];
            let strategy = StrategyRegistry::global().resolve(first)?;
            let ranks = match formation_ranks(&ctx, &strategy, first) {
                Ok(r) => r,
                Err(e @ physmom_core::Error::InsufficientHistory { .. }) => {
                    return Ok(members.iter().map(|&i| (i, Err(e.to_string()))).collect());
                }
                Err(e) => return Err(e.into()),
            };
            members
                .iter()
                .map(|&i| {
                    let result = run_ranked(&ctx, &configs[i], &ranks)?;
                    let cell = match risk_report(&result, &bench, rf, window) {
                        Ok(report) => {
                            let wealth = clip_and_rebase(&result.wealth, report.window_start, report.window_end);
                            Ok((report, wealth))
                        }
                        Err(physmom_core::Error::Data(msg)) => Err(msg),
                        Err(e) => return Err(e.into()),
                    };
                    Ok((i, cell))
                })
                .collect()
        })
        .collect::<Result<_, AppError>>()?;

    let mut slots: Vec<Option<Outcome>> = vec![None; configs.len()];
    for (i, cell) in cells.into_iter().flatten() {
        slots[i] = Some(cell);
    }
    let mut rows = Vec::with_capacity(configs.len());
    let mut wealth = BTreeMap::new();
    for (config, slot) in configs.into_iter().zip(slots) {
        let outcome = match slot.expect("every config belongs to one family") {
            Ok((report, curve)) => {
                wealth.insert(config.id(), curve);
                Ok(report)
            }
            Err(msg) => Err(msg),
        };
        rows.push(GridRow { config, outcome });
    }

    let bench_curve = clip_and_rebase(&bench, window.0, window.1);
    let benchmark = SeriesStats::from_wealth(&bench_curve, rf).ok().map(|(s, _)| s);
    Ok(TimescaleSweep {
        timescale,
        rows,
        wealth,
        benchmark,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BestEntry {
    pub portfolio: String,
    pub id: String,
    pub direction: String,
    #[serde(rename = "J")]
    pub lookback: usize,
    #[serde(rename = "K")]
    pub holding: usize,
    pub final_wealth: f64,
    pub report_file: String,
    pub wealth_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimescaleSummary {
    pub timescale: Timescale,
    pub configs: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub grid_file: String,
    pub best_file: String,
    pub best: Vec<BestEntry>,
}

/// Contents of `summary.json` for a grid run.
#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub groups: usize,
    pub rf_monthly: f64,
    pub symbols: usize,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub timescales: Vec<TimescaleSummary>,
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn create_out(out: &Path) -> Result<(), AppError> {
    fs::create_dir_all(out).map_err(|e| AppError::Runtime(format!("cannot create {}: {e}", out.display())))
}

/// Writes the files of a single run and returns their paths.
pub fn write_single(out: &Path, run: &SingleRun) -> Result<Vec<PathBuf>, AppError> {
    create_out(out)?;
    let config = &run.report.config;
    let wealth = output::wealth_file(out, config);
    let report = output::report_file(out, config);
    output::write_wealth(&wealth, &run.wealth)?;
    output::write_json(&report, &run.report)?;
    Ok(vec![wealth, report])
}

/// Writes the files of a grid run: per timescale the grid CSV, the best
/// table, one report per successful configuration and the wealth curves of
/// the best rows; then `summary.json`.
pub fn write_grid(out: &Path, panel: &AssetPanel, sweeps: &[TimescaleSweep], groups: usize, rf: f64) -> Result<GridSummary, AppError> {
    create_out(out)?;
    let mut summaries = Vec::new();
    for sweep in sweeps {
        let grid_path = out.join(format!("grid_{}.csv", sweep.timescale));
        output::write_grid(&grid_path, &sweep.rows)?;
        for row in &sweep.rows {
            if let Ok(report) = &row.outcome {
                output::write_json(&output::report_file(out, &row.config), report)?;
            }
        }
        let best = sweep.best();
        let best_path = out.join(format!("best_{}.csv", sweep.timescale));
        output::write_best(&best_path, &best, sweep.benchmark.as_ref())?;
        let mut entries = Vec::new();
        for row in &best {
            let id = row.config.id();
            let wealth_path = output::wealth_file(out, &row.config);
            output::write_wealth(&wealth_path, &sweep.wealth[&id])?;
            entries.push(BestEntry {
                portfolio: row.config.portfolio_label(),
                direction: row.config.direction.to_string(),
                lookback: row.config.lookback,
                holding: row.config.holding,
                final_wealth: row.outcome.as_ref().map(|r| r.final_wealth).unwrap_or(f64::NAN),
                report_file: file_name(&output::report_file(out, &row.config)),
                wealth_file: file_name(&wealth_path),
                id,
            });
        }
        let succeeded = sweep.rows.iter().filter(|r| r.outcome.is_ok()).count();
        summaries.push(TimescaleSummary {
            timescale: sweep.timescale,
            configs: sweep.rows.len(),
            succeeded,
            failed: sweep.rows.len() - succeeded,
            grid_file: file_name(&grid_path),
            best_file: file_name(&best_path),
            best: entries,
        });
    }
    let dates = panel.calendar().dates();
    let summary = GridSummary {
        groups,
        rf_monthly: rf,
        symbols: panel.symbol_count(),
        first_date: dates[0],
        last_date: dates[dates.len() - 1],
        timescales: summaries,
    };
    output::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Runs a merged configuration end to end.
pub fn execute(cfg: &RunConfig) -> Result<(), AppError> {
    match cfg.mode {
        Mode::Synth => {
            physmom_core::synth::synth_panel(&cfg.synth, &cfg.data_dir, &cfg.benchmark).map_err(|e| match e {
                physmom_core::Error::Config(_) => AppError::from(e),
                other => AppError::Runtime(other.to_string()),
            })?;
            log::info!(
                "wrote {} synthetic symbols x {} days to {}",
                cfg.synth.symbols,
                cfg.synth.days,
                cfg.data_dir.display()
            );
        }
        Mode::Single => {
            let config = cfg.strategy.expect("single mode carries a strategy");
            let panel = load(cfg)?;
            let run = single(&panel, &config, cfg.rf)?;
            for path in write_single(&cfg.out, &run)? {
                log::info!("wrote {}", path.display());
            }
        }
        Mode::Grid => {
            let panel = load(cfg)?;
            let sweeps = cfg
                .timescales
                .iter()
                .map(|&ts| sweep(&panel, ts, cfg.groups, cfg.rf))
                .collect::<Result<Vec<_>, _>>()?;
            write_grid(&cfg.out, &panel, &sweeps, cfg.groups, cfg.rf)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs, and returns the process exit
/// code. Diagnostics go to standard error.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_args(args).and_then(|cfg| execute(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("physmom: {e}");
            e.exit_code()
        }
    }
}
