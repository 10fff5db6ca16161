//! Overlapping-cohort accounting and the zero-cost wealth curve.
//!
//! Capital is split equally across the cohorts alive at a grid date. Each
//! cohort's baskets are bought at formation and never rebalanced, so their
//! weights drift with prices; every grid date marks each basket to the close
//! and the period return of a basket is the growth of its marked value.
//! A position whose close goes missing mid-hold is closed at its last marked
//! value and sits in cash for the rest of the hold.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{AssetPanel, PriceField, SymbolId};
use crate::portfolio::{build_cohort, Cohort, Direction, FormationContext, RankedGroups, Side, StrategyConfig, Weight};
use crate::registry::{ResolvedStrategy, StrategyRegistry};

/// Simple return of an equal-or-unequal weight basket bought at
/// `entry_field` on `from` and marked at the close on `to`:
/// `Σ|w|·r / Σ|w|` over the symbols priced at both ends.
pub fn basket_return(
    basket: &[(SymbolId, Weight)],
    panel: &AssetPanel,
    from: NaiveDate,
    to: NaiveDate,
    entry_field: PriceField,
) -> Result<f64> {
    let cal = panel.calendar();
    let lookup = |d: NaiveDate| {
        cal.index_of(d)
            .ok_or_else(|| Error::Config(format!("{d} is not a trading date")))
    };
    let (i, j) = (lookup(from)?, lookup(to)?);
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (symbol, w) in basket {
        let s = panel.series(*symbol);
        if let (Some(entry), Some(exit)) = (s.price(i, entry_field), s.close(j)) {
            let w = weight_abs(w);
            weighted += w * (exit / entry - 1.0);
            total += w;
        }
    }
    if total == 0.0 {
        return Err(Error::UndefinedBasketReturn { date: to });
    }
    Ok(weighted / total)
}

fn weight_abs(w: &Weight) -> f64 {
    (*w.numer() as f64 / *w.denom() as f64).abs()
}

#[derive(Debug, Clone)]
struct Holding {
    symbol: SymbolId,
    entry: f64,
    weight: f64,
    value: f64,
    open: bool,
}

/// Marked-to-market book of one basket.
#[derive(Debug, Clone)]
struct BasketBook {
    holdings: Vec<Holding>,
    value: f64,
}

impl BasketBook {
    fn open(basket: &[(SymbolId, Weight)], panel: &AssetPanel, index: usize, field: PriceField) -> Result<Self> {
        let mut holdings = Vec::with_capacity(basket.len());
        for (symbol, w) in basket {
            let entry = panel.series(*symbol).price(index, field).ok_or_else(|| {
                Error::Data(format!(
                    "{} has no entry price on {}",
                    panel.symbol_name(*symbol),
                    panel.calendar().date(index)
                ))
            })?;
            let weight = weight_abs(w);
            holdings.push(Holding {
                symbol: *symbol,
                entry,
                weight,
                value: weight,
                open: true,
            });
        }
        let value = holdings.iter().map(|h| h.value).sum();
        Ok(Self { holdings, value })
    }

    /// Marks every open holding at the close of `index` and returns the
    /// basket's return since the previous mark.
    fn mark(&mut self, panel: &AssetPanel, index: usize) -> f64 {
        let mut total = 0.0;
        for h in &mut self.holdings {
            if h.open {
                match panel.series(h.symbol).close(index) {
                    Some(c) => h.value = h.weight * c / h.entry,
                    None => h.open = false,
                }
            }
            total += h.value;
        }
        let r = total / self.value - 1.0;
        self.value = total;
        r
    }
}

#[derive(Debug, Clone)]
struct LiveCohort {
    cohort: Cohort,
    long: BasketBook,
    short: BasketBook,
}

/// Returns of one grid period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    /// Zero-cost return: `R_w - R_l` (traditional) or `R_l - R_w` (contrarian).
    pub zero_cost: f64,
    /// Winner-basket return averaged over the cohorts marked this period.
    pub winner: f64,
    pub loser: f64,
    /// Cohorts that contributed to this period.
    pub marked: usize,
}

/// Averages per-cohort (winner, loser) basket returns with equal capital
/// per cohort. With no cohorts every return is zero.
pub fn combine_cohort_returns(returns: &[(f64, f64)], direction: Direction) -> PeriodOutcome {
    if returns.is_empty() {
        return PeriodOutcome {
            zero_cost: 0.0,
            winner: 0.0,
            loser: 0.0,
            marked: 0,
        };
    }
    let n = returns.len() as f64;
    let winner = returns.iter().map(|r| r.0).sum::<f64>() / n;
    let loser = returns.iter().map(|r| r.1).sum::<f64>() / n;
    let zero_cost = match direction {
        Direction::Traditional => winner - loser,
        Direction::Contrarian => loser - winner,
    };
    PeriodOutcome {
        zero_cost,
        winner,
        loser,
        marked: returns.len(),
    }
}

/// Cohorts alive on the formation grid.
#[derive(Debug, Clone)]
pub struct CohortLedger {
    direction: Direction,
    active: Vec<LiveCohort>,
}

impl CohortLedger {
    pub fn new(direction: Direction) -> Self {
        Self {
            direction,
            active: Vec::new(),
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn active(&self) -> impl Iterator<Item = &Cohort> {
        self.active.iter().map(|c| &c.cohort)
    }

    /// Advances to grid position `pos` (calendar index `index`): marks every
    /// live cohort at the close, closes those whose liquidation position is
    /// reached, then opens `new_cohort` at its entry price.
    pub fn step(
        &mut self,
        new_cohort: Option<Cohort>,
        panel: &AssetPanel,
        pos: usize,
        index: usize,
    ) -> Result<PeriodOutcome> {
        let returns: Vec<(f64, f64)> = self
            .active
            .iter_mut()
            .map(|live| {
                let long = live.long.mark(panel, index);
                let short = live.short.mark(panel, index);
                match live.cohort.winner_side {
                    Side::Long => (long, short),
                    Side::Short => (short, long),
                }
            })
            .collect();
        let outcome = combine_cohort_returns(&returns, self.direction);
        self.active.retain(|live| live.cohort.liquidation_pos > pos);
        if let Some(cohort) = new_cohort {
            let long = BasketBook::open(&cohort.long, panel, index, cohort.entry_price_field)?;
            let short = BasketBook::open(&cohort.short, panel, index, cohort.entry_price_field)?;
            self.active.push(LiveCohort { cohort, long, short });
        }
        Ok(outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub date: NaiveDate,
    pub zero_cost: f64,
    pub winner: f64,
    pub loser: f64,
}

/// Raised when a period return is -100% or worse; the run stops there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaltEvent {
    pub date: NaiveDate,
    pub period_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub config: StrategyConfig,
    /// One record per grid date after the first formation.
    pub periods: Vec<PeriodRecord>,
    /// Starts at 1 on the first formation date; one point per period after.
    pub wealth: Vec<(NaiveDate, f64)>,
    /// Live cohorts after each grid step, from the first formation on.
    pub active_counts: Vec<(NaiveDate, usize)>,
    pub skipped_formations: usize,
    pub halted: Option<HaltEvent>,
}

impl BacktestResult {
    pub fn period_returns(&self) -> Vec<(NaiveDate, f64)> {
        self.periods.iter().map(|p| (p.date, p.zero_cost)).collect()
    }

    pub fn final_wealth(&self) -> f64 {
        self.wealth.last().map_or(1.0, |w| w.1)
    }

    fn compound(&self, pick: impl Fn(&PeriodRecord) -> f64) -> Vec<(NaiveDate, f64)> {
        let mut out = Vec::with_capacity(self.wealth.len());
        if let Some(&(start, _)) = self.wealth.first() {
            let mut w = 1.0;
            out.push((start, w));
            for p in &self.periods {
                w *= 1.0 + pick(p);
                out.push((p.date, w));
            }
        }
        out
    }

    /// Wealth of a unit long position in the winner baskets.
    pub fn winner_wealth(&self) -> Vec<(NaiveDate, f64)> {
        self.compound(|p| p.winner)
    }

    pub fn loser_wealth(&self) -> Vec<(NaiveDate, f64)> {
        self.compound(|p| p.loser)
    }
}

/// Runs `config` on `panel` with the builtin registry.
pub fn run_backtest(panel: &AssetPanel, config: &StrategyConfig) -> Result<BacktestResult> {
    config.validate()?;
    let strategy = StrategyRegistry::global().resolve(config)?;
    let ctx = FormationContext::with_horizon(panel, strategy.horizon.as_ref());
    run_in_context(&ctx, &strategy, config)
}

/// Runs `config` against a prepared context; the context's timescale must
/// match the strategy's horizon. Table limits on J/K are not enforced here
/// so that callers can probe off-grid settings.
pub fn run_in_context(ctx: &FormationContext<'_>, strategy: &ResolvedStrategy, config: &StrategyConfig) -> Result<BacktestResult> {
    let ranks = formation_ranks(ctx, strategy, config)?;
    run_ranked(ctx, config, &ranks)
}

/// Rankings at every formation date of `config`, from the first formation
/// to the end of the grid. They depend on momentum, mass, J and G only, so
/// one set serves every holding period and direction.
pub fn formation_ranks(
    ctx: &FormationContext<'_>,
    strategy: &ResolvedStrategy,
    config: &StrategyConfig,
) -> Result<FormationRanks> {
    if ctx.timescale() != strategy.horizon.timescale() {
        return Err(Error::Config(format!(
            "context built for {} but strategy runs on {}",
            ctx.timescale(),
            strategy.horizon.timescale()
        )));
    }
    if config.groups < 2 || config.holding == 0 || config.lookback == 0 {
        return Err(Error::Config(format!("invalid J/K/G in {}", config.id())));
    }
    let grid = ctx.grid();
    let first = ctx.first_formation(config.lookback, strategy.horizon.as_ref());
    let needed = first + 2;
    if grid.len() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            available: grid.len(),
        });
    }
    let ranks = (first..grid.len())
        .map(|pos| ctx.rank(strategy, config, pos))
        .collect::<Result<_>>()?;
    Ok(FormationRanks {
        timescale: ctx.timescale(),
        momentum: config.momentum,
        mass: config.mass,
        lookback: config.lookback,
        groups: config.groups,
        first,
        ranks,
    })
}

/// Output of [`formation_ranks`].
#[derive(Debug, Clone)]
pub struct FormationRanks {
    timescale: crate::portfolio::Timescale,
    momentum: crate::signals::MomentumKind,
    mass: crate::signals::MassKind,
    lookback: usize,
    groups: usize,
    first: usize,
    ranks: Vec<Option<RankedGroups>>,
}

impl FormationRanks {
    /// Grid position of the first formation.
    pub fn first(&self) -> usize {
        self.first
    }

    pub fn get(&self, pos: usize) -> Option<&RankedGroups> {
        pos.checked_sub(self.first).and_then(|i| self.ranks.get(i)).and_then(Option::as_ref)
    }

    pub fn serves(&self, config: &StrategyConfig) -> bool {
        self.timescale == config.timescale
            && self.momentum == config.momentum
            && self.mass == config.mass
            && self.lookback == config.lookback
            && self.groups == config.groups
    }
}

/// Replays the cohort ledger of `config` over precomputed rankings.
pub fn run_ranked(ctx: &FormationContext<'_>, config: &StrategyConfig, ranks: &FormationRanks) -> Result<BacktestResult> {
    if !ranks.serves(config) {
        return Err(Error::Config(format!("rankings do not belong to {}", config.id())));
    }
    if config.holding == 0 {
        return Err(Error::Config(format!("invalid K in {}", config.id())));
    }
    let panel = ctx.panel();
    let grid = ctx.grid();
    let dates = ctx.grid_dates();
    let first = ranks.first;

    let mut ledger = CohortLedger::new(config.direction);
    let mut periods = Vec::with_capacity(grid.len() - first);
    let mut wealth = Vec::with_capacity(grid.len() - first);
    let mut active_counts = Vec::with_capacity(grid.len() - first);
    let mut skipped = 0;
    let mut halted = None;
    let mut w = 1.0;
    wealth.push((dates[first], w));

    for pos in first..grid.len() {
        let date = dates[pos];
        let groups = ranks.get(pos);
        if groups.is_none() {
            skipped += 1;
        }
        let cohort = groups.map(|g| build_cohort(g, config, dates));
        let outcome = ledger.step(cohort, panel, pos, grid[pos])?;
        active_counts.push((date, ledger.active_count()));
        if pos == first {
            continue;
        }
        if 1.0 + outcome.zero_cost <= 0.0 {
            log::warn!(
                "{}: period return {} on {date} wipes out the notional, run halted",
                config.id(),
                outcome.zero_cost
            );
            halted = Some(HaltEvent {
                date,
                period_return: outcome.zero_cost,
            });
            break;
        }
        w *= 1.0 + outcome.zero_cost;
        periods.push(PeriodRecord {
            date,
            zero_cost: outcome.zero_cost,
            winner: outcome.winner,
            loser: outcome.loser,
        });
        wealth.push((date, w));
    }

    Ok(BacktestResult {
        config: *config,
        periods,
        wealth,
        active_counts,
        skipped_formations: skipped,
        halted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{Bar, CalendarPolicy};
    use num_rational::Ratio;
    use std::collections::BTreeMap;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn bar(date: &str, open: f64, close: f64) -> Bar {
        Bar {
            date: d(date),
            open,
            close,
            volume: 100.0,
            shares_outstanding: 1000.0,
        }
    }

    type Rows<'a> = &'a [(&'a str, f64, f64)];

    fn panel(series: &[(&str, Rows<'_>)]) -> AssetPanel {
        let mut bars = BTreeMap::new();
        for (sym, rows) in series {
            bars.insert(
                sym.to_string(),
                rows.iter().map(|(dt, o, c)| bar(dt, *o, *c)).collect(),
            );
        }
        AssetPanel::from_bars(bars, vec![(d("2014-01-02"), 1.0)], CalendarPolicy::Union).unwrap()
    }

    #[test]
    fn basket_return_examples() {
        let p = panel(&[
            ("A", &[("2014-01-02", 100.0, 100.0), ("2014-01-03", 100.0, 110.0)]),
            ("B", &[("2014-01-02", 100.0, 100.0), ("2014-01-03", 100.0, 90.0)]),
            ("C", &[("2014-01-02", 50.0, 40.0), ("2014-01-03", 50.0, 46.0)]),
        ]);
        let (a, b, c) = (SymbolId(0), SymbolId(1), SymbolId(2));
        let one = Ratio::from_integer(1);
        let half = Ratio::new(1, 2);
        let (from, to) = (d("2014-01-02"), d("2014-01-03"));
        let r = basket_return(&[(a, one)], &p, from, to, PriceField::Close).unwrap();
        assert!((r - 0.10).abs() < 1e-15);
        let r = basket_return(&[(a, half), (b, half)], &p, from, to, PriceField::Close).unwrap();
        assert!(r.abs() < 1e-15);
        // weights 1/2, 1/4, 1/4 on short side: sign ignored, magnitudes weight
        let basket = [(a, -half), (b, -Ratio::new(1, 4)), (c, -Ratio::new(1, 4))];
        let r = basket_return(&basket, &p, from, to, PriceField::Open).unwrap();
        let expected = 0.5 * 0.10 + 0.25 * -0.10 + 0.25 * (46.0 / 50.0 - 1.0);
        assert!((r - expected).abs() < 1e-15);
    }

    #[test]
    fn basket_return_undefined_when_all_missing() {
        let p = panel(&[
            ("A", &[("2014-01-02", 100.0, 100.0)]),
            ("B", &[("2014-01-02", 100.0, 100.0), ("2014-01-03", 100.0, 90.0)]),
        ]);
        let err = basket_return(
            &[(SymbolId(0), Ratio::from_integer(1))],
            &p,
            d("2014-01-02"),
            d("2014-01-03"),
            PriceField::Close,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UndefinedBasketReturn { .. }));
    }

    #[test]
    fn combine_examples() {
        let one = combine_cohort_returns(&[(0.03, 0.01)], Direction::Traditional);
        assert!((one.zero_cost - 0.02).abs() < 1e-15);
        let three = combine_cohort_returns(&[(0.01, 0.0), (0.02, 0.0), (0.03, 0.0)], Direction::Traditional);
        assert!((three.zero_cost - 0.02).abs() < 1e-15);
        let contra = combine_cohort_returns(&[(0.01, 0.0), (0.02, 0.0), (0.03, 0.0)], Direction::Contrarian);
        assert_eq!(contra.zero_cost, -three.zero_cost);
        assert_eq!(combine_cohort_returns(&[], Direction::Traditional).zero_cost, 0.0);
    }

    #[test]
    fn delisted_position_sits_in_cash() {
        let p = panel(&[
            (
                "A",
                &[("2014-01-02", 10.0, 10.0), ("2014-01-03", 10.0, 12.0), ("2014-01-06", 10.0, 11.0)],
            ),
            ("B", &[("2014-01-02", 10.0, 10.0), ("2014-01-03", 10.0, 11.0)]),
        ]);
        let half = Ratio::new(1, 2);
        let mut book = BasketBook::open(&[(SymbolId(0), half), (SymbolId(1), half)], &p, 0, PriceField::Close).unwrap();
        let r1 = book.mark(&p, 1);
        assert!((r1 - 0.15).abs() < 1e-15);
        // B gone: its 0.55 stays in cash, A goes 0.6 -> 0.55
        let r2 = book.mark(&p, 2);
        assert!((r2 - (1.10 / 1.15 - 1.0)).abs() < 1e-15);
    }
}
