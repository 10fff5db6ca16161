//! Report files: wealth curves, JSON reports, grid rows and the
//! best-of-timescale table.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use physmom_core::analytics::SeriesStats;
use physmom_core::{Direction, RiskReport, StrategyConfig};
use serde::Serialize;

use crate::AppError;

/// Columns of the best-of-timescale table.
pub const BEST_COLUMNS: [&str; 10] = [
    "Portfolio",
    "Strategy",
    "J-K",
    "Basket",
    "Mean",
    "Std. Dev.",
    "Fin. Wealth",
    "Sharpe",
    "VaR₉₅",
    "MDD",
];

/// Columns of `grid_<timescale>.csv`.
pub const GRID_COLUMNS: [&str; 22] = [
    "id",
    "momentum",
    "mass",
    "timescale",
    "J",
    "K",
    "direction",
    "groups",
    "status",
    "window_start",
    "window_end",
    "months",
    "monthly_mean_pct",
    "monthly_std_pct",
    "final_wealth",
    "sharpe",
    "var95_pct",
    "mdd_pct",
    "capm_alpha_pct",
    "capm_beta",
    "winner_final_wealth",
    "loser_final_wealth",
];

fn write_error(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Runtime(format!("cannot write {}: {e}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn wealth_file(out: &Path, config: &StrategyConfig) -> PathBuf {
    out.join(format!("wealth_{}.csv", config.id()))
}

pub fn report_file(out: &Path, config: &StrategyConfig) -> PathBuf {
    out.join(format!("report_{}.json", config.id()))
}

pub fn write_wealth(path: &Path, wealth: &[(NaiveDate, f64)]) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_error(path, e))?;
    w.write_record(["date", "wealth"]).map_err(|e| write_error(path, e))?;
    for (date, value) in wealth {
        w.write_record([date.to_string(), value.to_string()])
            .map_err(|e| write_error(path, e))?;
    }
    w.flush().map_err(|e| write_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| write_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| write_error(path, e))
}

/// One enumerated configuration and how its run ended.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub config: StrategyConfig,
    pub outcome: Result<RiskReport, String>,
}

pub fn write_grid(path: &Path, rows: &[GridRow]) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_error(path, e))?;
    w.write_record(GRID_COLUMNS).map_err(|e| write_error(path, e))?;
    for row in rows {
        let c = &row.config;
        let mut record = vec![
            c.id(),
            c.momentum.to_string(),
            c.mass.to_string(),
            c.timescale.to_string(),
            c.lookback.to_string(),
            c.holding.to_string(),
            c.direction.to_string(),
            c.groups.to_string(),
        ];
        match &row.outcome {
            Ok(r) => record.extend([
                "ok".to_string(),
                r.window_start.to_string(),
                r.window_end.to_string(),
                r.months.to_string(),
                r.monthly_mean_pct.to_string(),
                opt(r.monthly_std_pct),
                r.final_wealth.to_string(),
                opt(r.sharpe),
                r.var95_pct.to_string(),
                r.mdd_pct.to_string(),
                opt(r.capm_alpha_pct),
                opt(r.capm_beta),
                r.winner.final_wealth.to_string(),
                r.loser.final_wealth.to_string(),
            ]),
            Err(msg) => {
                record.push(format!("error: {msg}"));
                record.extend(std::iter::repeat_n(String::new(), GRID_COLUMNS.len() - 9));
            }
        }
        w.write_record(&record).map_err(|e| write_error(path, e))?;
    }
    w.flush().map_err(|e| write_error(path, e))
}

/// Best configuration per (momentum, mass) family by final wealth, in
/// enumeration order of the families. Ties keep the earlier row.
pub fn best_rows(rows: &[GridRow]) -> Vec<&GridRow> {
    let mut best: Vec<&GridRow> = Vec::new();
    for row in rows {
        let Ok(report) = &row.outcome else { continue };
        let family = (row.config.momentum, row.config.mass);
        match best.iter_mut().find(|b| (b.config.momentum, b.config.mass) == family) {
            Some(slot) => {
                let current = slot.outcome.as_ref().map(|r| r.final_wealth).unwrap_or(f64::NEG_INFINITY);
                if report.final_wealth > current {
                    *slot = row;
                }
            }
            None => best.push(row),
        }
    }
    best.sort_by_key(|r| (r.config.momentum, r.config.mass));
    best
}

fn stats_record(portfolio: &str, strategy: &str, jk: &str, basket: &str, s: &SeriesStats) -> Vec<String> {
    vec![
        portfolio.to_string(),
        strategy.to_string(),
        jk.to_string(),
        basket.to_string(),
        s.monthly_mean_pct.to_string(),
        opt(s.monthly_std_pct),
        s.final_wealth.to_string(),
        opt(s.sharpe),
        s.var95_pct.to_string(),
        s.mdd_pct.to_string(),
    ]
}

fn capitalized(direction: Direction) -> &'static str {
    match direction {
        Direction::Traditional => "Traditional",
        Direction::Contrarian => "Contrarian",
    }
}

/// Three rows per family (winner, loser, zero-cost) and a closing
/// benchmark row.
pub fn write_best(path: &Path, best: &[&GridRow], benchmark: Option<&SeriesStats>) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_error(path, e))?;
    w.write_record(BEST_COLUMNS).map_err(|e| write_error(path, e))?;
    for row in best {
        let Ok(r) = &row.outcome else { continue };
        let c = &row.config;
        let label = c.portfolio_label();
        let strategy = capitalized(c.direction);
        let jk = format!("{}-{}", c.lookback, c.holding);
        let zero_cost_label = match c.direction {
            Direction::Traditional => "W - L",
            Direction::Contrarian => "L - W",
        };
        let zero_cost = SeriesStats {
            monthly_mean_pct: r.monthly_mean_pct,
            monthly_std_pct: r.monthly_std_pct,
            final_wealth: r.final_wealth,
            sharpe: r.sharpe,
            var95_pct: r.var95_pct,
            mdd_pct: r.mdd_pct,
            months: r.months,
        };
        for (basket, stats) in [("Winner (W)", &r.winner), ("Loser (L)", &r.loser), (zero_cost_label, &zero_cost)] {
            w.write_record(stats_record(&label, strategy, &jk, basket, stats))
                .map_err(|e| write_error(path, e))?;
        }
    }
    if let Some(b) = benchmark {
        w.write_record(stats_record("Benchmark", "", "", "Index", b))
            .map_err(|e| write_error(path, e))?;
    }
    w.flush().map_err(|e| write_error(path, e))
}
