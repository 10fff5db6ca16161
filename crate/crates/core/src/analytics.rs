//! Return statistics and risk measures over a benchmark-aligned window.
//!
//! Percent-valued fields carry a `_pct` suffix. Monthly figures are never
//! annualized.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::backtest::BacktestResult;
use crate::error::{Error, Result};
use crate::market_data::TradingCalendar;
use crate::portfolio::{StrategyConfig, Timescale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    pub fn of(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }

    fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Calendar-month compounded returns of a dated wealth curve.
///
/// Each month is valued at its last wealth point; a month without points
/// carries the previous value. The first month only serves as the base.
pub fn monthly_returns(wealth: &[(NaiveDate, f64)]) -> Result<Vec<(Month, f64)>> {
    let (Some(first), Some(last)) = (wealth.first(), wealth.last()) else {
        return Err(Error::Data("empty wealth curve".into()));
    };
    let end = Month::of(last.0);
    let mut month = Month::of(first.0);
    let mut idx = 0;
    let mut value = first.1;
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    loop {
        while idx < wealth.len() && Month::of(wealth[idx].0) == month {
            value = wealth[idx].1;
            idx += 1;
        }
        if let Some(p) = prev {
            out.push((month, value / p - 1.0));
        }
        prev = Some(value);
        if month == end {
            break;
        }
        month = month.next();
    }
    if out.is_empty() {
        return Err(Error::Data("fewer than 2 calendar months of wealth".into()));
    }
    Ok(out)
}

/// Most negative peak-to-trough decline, as a fraction (`<= 0`).
pub fn max_drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0;
    for &v in values {
        peak = peak.max(v);
        let dd = (v - peak) / peak;
        if dd < worst {
            worst = dd;
        }
    }
    worst
}

/// Negated nearest-rank 5th percentile: the `ceil(0.05 n)`-th smallest return.
pub fn value_at_risk_95(returns: &[f64]) -> Option<f64> {
    if returns.is_empty() {
        return None;
    }
    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((0.05 * sorted.len() as f64).ceil() as usize).max(1);
    Some(-sorted[k - 1])
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (divisor n - 1).
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// `(mean - rf) / std`; `None` when the deviation is zero or undefined.
pub fn sharpe_ratio(values: &[f64], rf: f64) -> Option<f64> {
    let s = sample_std(values)?;
    (s > 0.0).then(|| (mean(values).unwrap() - rf) / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapmFit {
    /// Per period, as a fraction.
    pub alpha: f64,
    pub beta: f64,
}

/// Ordinary least squares of `portfolio - rf` on `benchmark - rf`.
pub fn capm_fit(portfolio: &[f64], benchmark: &[f64], rf: f64) -> Option<CapmFit> {
    if portfolio.len() != benchmark.len() || portfolio.len() < 2 {
        return None;
    }
    let y: Vec<f64> = portfolio.iter().map(|r| r - rf).collect();
    let x: Vec<f64> = benchmark.iter().map(|r| r - rf).collect();
    let (mx, my) = (mean(&x)?, mean(&y)?);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta = sxy / sxx;
    Some(CapmFit {
        alpha: my - beta * mx,
        beta,
    })
}

/// Comparison window for a timescale family: longer families skip whole
/// years of lookback warm-up at the start. Falls back to the full calendar
/// when the data is too short to shift.
pub fn benchmark_window(timescale: Timescale, calendar: &TradingCalendar) -> (NaiveDate, NaiveDate) {
    let dates = calendar.dates();
    let (first, last) = (dates[0], dates[dates.len() - 1]);
    let shift = timescale.horizon().benchmark_warmup_years();
    let start_year = first.year() + shift;
    let start = dates
        .iter()
        .copied()
        .find(|d| d.year() >= start_year)
        .unwrap_or(first);
    (start, last)
}

/// [`benchmark_window`] for the timescale of `config`.
pub fn config_window(config: &StrategyConfig, calendar: &TradingCalendar) -> (NaiveDate, NaiveDate) {
    benchmark_window(config.timescale, calendar)
}

/// Statistics of one wealth curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub monthly_mean_pct: f64,
    pub monthly_std_pct: Option<f64>,
    pub final_wealth: f64,
    pub sharpe: Option<f64>,
    pub var95_pct: f64,
    pub mdd_pct: f64,
    pub months: usize,
}

impl SeriesStats {
    pub fn from_wealth(wealth: &[(NaiveDate, f64)], rf: f64) -> Result<(Self, Vec<(Month, f64)>)> {
        let monthly = monthly_returns(wealth)?;
        let values: Vec<f64> = monthly.iter().map(|m| m.1).collect();
        let curve: Vec<f64> = wealth.iter().map(|w| w.1).collect();
        let stats = Self {
            monthly_mean_pct: 100.0 * mean(&values).unwrap_or(0.0),
            monthly_std_pct: sample_std(&values).map(|s| 100.0 * s),
            final_wealth: curve[curve.len() - 1] / curve[0],
            sharpe: sharpe_ratio(&values, rf),
            var95_pct: 100.0 * value_at_risk_95(&values).unwrap_or(0.0),
            mdd_pct: 100.0 * max_drawdown(&curve),
            months: values.len(),
        };
        Ok((stats, monthly))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub config: StrategyConfig,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub monthly_mean_pct: f64,
    pub monthly_std_pct: Option<f64>,
    pub final_wealth: f64,
    pub sharpe: Option<f64>,
    pub var95_pct: f64,
    pub mdd_pct: f64,
    /// Per month, percent.
    pub capm_alpha_pct: Option<f64>,
    pub capm_beta: Option<f64>,
    /// Sharpe of the per-grid-date zero-cost returns, rf not applied.
    pub period_sharpe: Option<f64>,
    pub rf_monthly: f64,
    pub months: usize,
    pub winner: SeriesStats,
    pub loser: SeriesStats,
    pub benchmark: SeriesStats,
}

/// Points of `wealth` dated within `from..=to`, rebased to 1 at the first.
pub fn clip_and_rebase(wealth: &[(NaiveDate, f64)], from: NaiveDate, to: NaiveDate) -> Vec<(NaiveDate, f64)> {
    let clipped: Vec<_> = wealth.iter().filter(|w| w.0 >= from && w.0 <= to).copied().collect();
    match clipped.first() {
        Some(&(_, base)) => clipped.into_iter().map(|(d, w)| (d, w / base)).collect(),
        None => clipped,
    }
}

/// Reduces a backtest to its report. `benchmark` is a dated level series
/// (closes or wealth); `window` usually comes from [`benchmark_window`].
/// The effective window starts at the later of `window.0` and the
/// portfolio's first wealth date, and both curves are rebased there.
pub fn risk_report(
    result: &BacktestResult,
    benchmark: &[(NaiveDate, f64)],
    rf: f64,
    window: (NaiveDate, NaiveDate),
) -> Result<RiskReport> {
    let first = result
        .wealth
        .first()
        .ok_or_else(|| Error::Data("backtest produced no wealth curve".into()))?
        .0;
    let start = window.0.max(first);
    let end = window.1;
    let wealth = clip_and_rebase(&result.wealth, start, end);
    let bench = clip_and_rebase(benchmark, start, end);
    if wealth.len() < 2 || bench.is_empty() {
        return Err(Error::Data(format!(
            "{}: no overlapping window between portfolio and benchmark in {start}..{end}",
            result.config.id()
        )));
    }
    let (stats, monthly) = SeriesStats::from_wealth(&wealth, rf)?;
    let (winner, _) = SeriesStats::from_wealth(&clip_and_rebase(&result.winner_wealth(), start, end), rf)?;
    let (loser, _) = SeriesStats::from_wealth(&clip_and_rebase(&result.loser_wealth(), start, end), rf)?;
    let (bench_stats, bench_monthly) = SeriesStats::from_wealth(&bench, rf)?;

    let bench_by_month: std::collections::HashMap<Month, f64> = bench_monthly.into_iter().collect();
    let (port_r, bench_r): (Vec<f64>, Vec<f64>) = monthly
        .iter()
        .filter_map(|(m, r)| bench_by_month.get(m).map(|b| (*r, *b)))
        .unzip();
    let fit = capm_fit(&port_r, &bench_r, rf);

    let period: Vec<f64> = result
        .periods
        .iter()
        .filter(|p| p.date > start && p.date <= end)
        .map(|p| p.zero_cost)
        .collect();

    Ok(RiskReport {
        config: result.config,
        window_start: start,
        window_end: wealth[wealth.len() - 1].0,
        monthly_mean_pct: stats.monthly_mean_pct,
        monthly_std_pct: stats.monthly_std_pct,
        final_wealth: stats.final_wealth,
        sharpe: stats.sharpe,
        var95_pct: stats.var95_pct,
        mdd_pct: stats.mdd_pct,
        capm_alpha_pct: fit.map(|f| 100.0 * f.alpha),
        capm_beta: fit.map(|f| f.beta),
        period_sharpe: sharpe_ratio(&period, 0.0),
        rf_monthly: rf,
        months: stats.months,
        winner,
        loser,
        benchmark: bench_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn flat_wealth_has_zero_monthly_returns() {
        let w = vec![(d(2014, 1, 2), 1.0), (d(2014, 2, 3), 1.0), (d(2014, 3, 3), 1.0)];
        let m = monthly_returns(&w).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.iter().all(|r| r.1 == 0.0));
    }

    #[test]
    fn doubling_each_month() {
        let w = vec![
            (d(2014, 1, 2), 1.0),
            (d(2014, 1, 31), 1.0),
            (d(2014, 2, 28), 2.0),
            (d(2014, 3, 31), 4.0),
        ];
        let m = monthly_returns(&w).unwrap();
        assert_eq!(m, vec![(Month { year: 2014, month: 2 }, 1.0), (Month { year: 2014, month: 3 }, 1.0)]);
    }

    #[test]
    fn gap_months_carry_value() {
        let w = vec![(d(2014, 1, 2), 1.0), (d(2014, 4, 1), 1.5)];
        let m = monthly_returns(&w).unwrap();
        assert_eq!(m.iter().map(|r| r.1).collect::<Vec<_>>(), vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn single_month_is_an_error() {
        assert!(monthly_returns(&[(d(2014, 1, 2), 1.0), (d(2014, 1, 3), 1.1)]).is_err());
        assert!(monthly_returns(&[]).is_err());
    }

    #[test]
    fn drawdown_examples() {
        assert_eq!(max_drawdown(&[1.0, 1.1, 1.2, 1.5]), 0.0);
        assert!((max_drawdown(&[1.0, 1.2, 0.9, 1.1]) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn var_nearest_rank() {
        // n = 20 -> k = 1, smallest
        let r: Vec<f64> = (0..20).map(|i| f64::from(i) / 100.0 - 0.05).collect();
        assert_eq!(value_at_risk_95(&r), Some(0.05));
        // n = 21 -> k = ceil(1.05) = 2
        let mut r2 = r.clone();
        r2.push(0.5);
        assert!((value_at_risk_95(&r2).unwrap() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn capm_exact_linear() {
        let b = [0.01, -0.02, 0.03, 0.005];
        let p: Vec<f64> = b.iter().map(|x| 2.0 * x).collect();
        let fit = capm_fit(&p, &b, 0.0).unwrap();
        assert!((fit.beta - 2.0).abs() < 1e-12);
        assert!(fit.alpha.abs() < 1e-15);
        assert!(capm_fit(&[0.1, 0.2], &[0.0, 0.0], 0.0).is_none());
    }

    #[test]
    fn zero_std_sharpe_undefined() {
        assert_eq!(sharpe_ratio(&[0.01, 0.01, 0.01], 0.0), None);
        assert_eq!(sharpe_ratio(&[0.01], 0.0), None);
    }

    #[test]
    fn windows_by_timescale() {
        let mut dates = Vec::new();
        for y in 2014..=2021 {
            dates.push(d(y, 1, 2));
            dates.push(d(y, 12, 30));
        }
        let cal = TradingCalendar::new(dates).unwrap();
        assert_eq!(benchmark_window(Timescale::Month, &cal), (d(2015, 1, 2), d(2021, 12, 30)));
        assert_eq!(benchmark_window(Timescale::Year, &cal), (d(2018, 1, 2), d(2021, 12, 30)));
        assert_eq!(benchmark_window(Timescale::Day, &cal), (d(2014, 1, 2), d(2021, 12, 30)));
        assert_eq!(benchmark_window(Timescale::Week, &cal).0, d(2014, 1, 2));
    }
}
