//! Naive re-derivation of the whole pipeline from raw bars: grid, scores,
//! ranks, cohorts, marked basket values and period returns. Shares no code
//! with the engine beyond the input types; every quantity is recomputed from
//! scratch with plain loops and maps.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Datelike, NaiveDate};
use physmom_core::market_data::Bar;
use physmom_core::synth::SyntheticMarket;
use physmom_core::{Direction, MassKind, MomentumKind, StrategyConfig, Timescale};

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePeriod {
    pub date: NaiveDate,
    pub zero_cost: f64,
    pub winner: f64,
    pub loser: f64,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub periods: Vec<OraclePeriod>,
    pub active_counts: Vec<(NaiveDate, usize)>,
    /// Eligible-symbol scores per formation date, keyed by symbol name.
    pub scores: BTreeMap<NaiveDate, BTreeMap<String, f64>>,
}

struct OracleCohort {
    formed: usize,
    winners: Vec<String>,
    losers: Vec<String>,
    entry_on: NaiveDate,
}

pub fn oracle_grid(dates: &[NaiveDate], timescale: Timescale) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for d in dates {
        let key = match timescale {
            Timescale::Day => (d.year(), d.ordinal(), 0),
            Timescale::Week => (d.iso_week().year(), d.iso_week().week(), 1),
            Timescale::Month => (d.year(), d.month(), 2),
            Timescale::Year => (d.year(), 0, 3),
        };
        if seen.insert(key) {
            out.push(*d);
        }
    }
    out
}

pub fn oracle_backtest(market: &SyntheticMarket, config: &StrategyConfig) -> OracleResult {
    let mut all_dates = BTreeSet::new();
    let mut book: HashMap<(String, NaiveDate), Bar> = HashMap::new();
    for (sym, bars) in &market.bars {
        for b in bars {
            all_dates.insert(b.date);
            book.insert((sym.clone(), b.date), *b);
        }
    }
    let dates: Vec<NaiveDate> = all_dates.into_iter().collect();
    let grid = oracle_grid(&dates, config.timescale);
    let symbols: Vec<String> = market.bars.keys().cloned().collect();
    let daily = config.timescale == Timescale::Day;
    let lag = usize::from(daily);
    let j = config.lookback;
    let first = j + lag;

    let has = |s: &str, d: NaiveDate| book.contains_key(&(s.to_string(), d));
    let close = |s: &str, d: NaiveDate| book[&(s.to_string(), d)].close;

    let mut cohorts: Vec<OracleCohort> = Vec::new();
    let mut result = OracleResult {
        periods: Vec::new(),
        active_counts: Vec::new(),
        scores: BTreeMap::new(),
    };

    for p in first..grid.len() {
        // Period returns for cohorts formed before p and not yet liquidated.
        if p > first {
            let mut wins = Vec::new();
            let mut loses = Vec::new();
            for c in cohorts.iter().filter(|c| c.formed < p && c.formed + config.holding >= p) {
                wins.push(period_return(&c.winners, c, p, &grid, &book, daily));
                loses.push(period_return(&c.losers, c, p, &grid, &book, daily));
            }
            let (w, l) = if wins.is_empty() {
                (0.0, 0.0)
            } else {
                (
                    wins.iter().sum::<f64>() / wins.len() as f64,
                    loses.iter().sum::<f64>() / loses.len() as f64,
                )
            };
            let zc = match config.direction {
                Direction::Traditional => w - l,
                Direction::Contrarian => l - w,
            };
            result.periods.push(OraclePeriod {
                date: grid[p],
                zero_cost: zc,
                winner: w,
                loser: l,
            });
        }

        // Scores at formation p.
        let last_step = p - lag;
        let first_step = last_step + 1 - j;
        let span_from = grid[first_step - 1];
        let span_to = grid[p];
        let mut scored: Vec<(String, f64)> = Vec::new();
        for s in &symbols {
            if !dates.iter().filter(|d| **d >= span_from && **d <= span_to).all(|d| has(s, *d)) {
                continue;
            }
            let mut v = Vec::new();
            let mut u = Vec::new();
            for step in first_step..=last_step {
                let (a, b) = (grid[step - 1], grid[step]);
                v.push((close(s, b) / close(s, a)).ln());
                let mut vol = 0.0;
                for d in dates.iter().filter(|d| **d > a && **d <= b) {
                    vol += book[&(s.clone(), *d)].volume;
                }
                u.push(vol / book[&(s.clone(), b)].shares_outstanding);
            }
            let n = v.len() as f64;
            let mean_v = v.iter().sum::<f64>() / n;
            let sigma = if v.len() >= 2 {
                (v.iter().map(|x| (x - mean_v).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                f64::NAN
            };
            let masses: Option<Vec<f64>> = match config.mass {
                MassKind::TurnoverRate => Some(u.clone()),
                MassKind::InverseTurnover => {
                    if u.contains(&0.0) {
                        None
                    } else {
                        Some(u.iter().map(|x| 1.0 / x).collect())
                    }
                }
                MassKind::InverseVolatility => {
                    if sigma == 0.0 {
                        None
                    } else {
                        Some(vec![1.0 / sigma; v.len()])
                    }
                }
            };
            let Some(m) = masses else { continue };
            let score = match config.momentum {
                MomentumKind::P1 => {
                    let mut acc = 0.0;
                    for i in 0..v.len() {
                        acc += m[i] * v[i];
                    }
                    acc
                }
                MomentumKind::P2 => {
                    let total: f64 = m.iter().sum();
                    if total == 0.0 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for i in 0..v.len() {
                        acc += m[i] * v[i];
                    }
                    acc / total
                }
                MomentumKind::P3 => {
                    if sigma == 0.0 {
                        continue;
                    }
                    mean_v / sigma
                }
            };
            if score.is_finite() {
                scored.push((s.clone(), score));
            }
        }
        result
            .scores
            .insert(grid[p], scored.iter().cloned().collect());

        cohorts.retain(|c| c.formed + config.holding > p);
        if scored.len() >= config.groups {
            scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            let g = config.groups;
            let base = scored.len() / g;
            let extra = scored.len() % g;
            let loser_size = base + usize::from(extra > 0);
            let winner_size = base + usize::from(g - 1 < extra);
            let losers = scored[..loser_size].iter().map(|x| x.0.clone()).collect();
            let winners = scored[scored.len() - winner_size..].iter().map(|x| x.0.clone()).collect();
            cohorts.push(OracleCohort {
                formed: p,
                winners,
                losers,
                entry_on: grid[p],
            });
        }
        result.active_counts.push((grid[p], cohorts.len()));
    }
    result
}

/// Equal-weight basket value at grid position `at`, drifting with closes
/// from the entry price; a holding whose close is missing at some mark is
/// frozen at its previous mark from then on.
fn basket_value(
    names: &[String],
    c: &OracleCohort,
    at: usize,
    grid: &[NaiveDate],
    book: &HashMap<(String, NaiveDate), Bar>,
    daily: bool,
) -> f64 {
    let w = 1.0 / names.len() as f64;
    let mut total = 0.0;
    for s in names {
        let entry_bar = book[&(s.clone(), c.entry_on)];
        let entry = if daily { entry_bar.open } else { entry_bar.close };
        let mut value = w;
        for date in &grid[c.formed + 1..=at] {
            match book.get(&(s.clone(), *date)) {
                Some(b) => value = w * b.close / entry,
                None => break,
            }
        }
        total += value;
    }
    total
}

fn period_return(
    names: &[String],
    c: &OracleCohort,
    p: usize,
    grid: &[NaiveDate],
    book: &HashMap<(String, NaiveDate), Bar>,
    daily: bool,
) -> f64 {
    let now = basket_value(names, c, p, grid, book, daily);
    let before = if p - 1 == c.formed {
        // value at formation: weights sum
        names.iter().map(|_| 1.0 / names.len() as f64).sum()
    } else {
        basket_value(names, c, p - 1, grid, book, daily)
    };
    now / before - 1.0
}
