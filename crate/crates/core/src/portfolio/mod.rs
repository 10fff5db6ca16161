//! Ranking the eligible universe on each formation date and turning the
//! extreme groups into a dollar-neutral cohort.

mod grid;
mod horizon;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{AssetPanel, PriceField, SymbolId};
use crate::registry::{ResolvedStrategy, StrategyRegistry};
use crate::signals::{MassKind, MomentumKind, SignalError, SignalWindow, StepView};

pub use grid::{enumerate_grid, grid_count, DAILY_QUOTED_COUNT};
pub use horizon::{Daily, Horizon, Monthly, Timescale, Weekly, Yearly, MAX_YEARLY_SPAN};

pub const DEFAULT_GROUPS: usize = 50;

/// Exact portfolio weight.
pub type Weight = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Long winners, short losers.
    Traditional,
    /// Long losers, short winners.
    Contrarian,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Traditional, Direction::Contrarian];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Traditional => "traditional",
            Direction::Contrarian => "contrarian",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Traditional => Direction::Contrarian,
            Direction::Contrarian => Direction::Traditional,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Direction::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown direction '{s}' (traditional|contrarian)")))
    }
}

/// One cell of the strategy grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub momentum: MomentumKind,
    pub mass: MassKind,
    pub timescale: Timescale,
    /// Lookback J, in timescale steps.
    #[serde(rename = "J")]
    pub lookback: usize,
    /// Holding K, in timescale steps.
    #[serde(rename = "K")]
    pub holding: usize,
    pub direction: Direction,
    pub groups: usize,
}

impl StrategyConfig {
    /// Checks the (timescale, J, K) table limits, the momentum/mass pairing
    /// and the group count.
    pub fn validate(&self) -> Result<()> {
        if !self.mass.compatible_with(self.momentum) {
            return Err(Error::Config(format!(
                "mass {} cannot be used with momentum {}",
                self.mass, self.momentum
            )));
        }
        let horizon = self.timescale.horizon();
        if !horizon.admits(self.lookback, self.holding, self.momentum) {
            return Err(Error::Config(format!(
                "J={} K={} outside the {} grid (J in {:?}, K in {:?}{})",
                self.lookback,
                self.holding,
                self.timescale,
                horizon.lookback_range(self.momentum),
                horizon.holding_range(),
                if self.timescale == Timescale::Year {
                    format!(", J+K <= {MAX_YEARLY_SPAN}")
                } else {
                    String::new()
                }
            )));
        }
        if self.groups < 2 {
            return Err(Error::Config(format!("need at least 2 groups, got {}", self.groups)));
        }
        Ok(())
    }

    /// File-safe identifier, e.g. `day_p2_inv_turnover_J3_K1_contrarian`.
    pub fn id(&self) -> String {
        format!(
            "{}_{}_{}_J{}_K{}_{}",
            self.timescale, self.momentum, self.mass, self.lookback, self.holding, self.direction
        )
    }

    /// Table label: `p2*(1/υ,R)` for a contrarian p2 on inverse turnover.
    pub fn portfolio_label(&self) -> String {
        let star = if self.direction == Direction::Contrarian { "*" } else { "" };
        format!("{}{star}({},R)", self.momentum, self.mass.symbol())
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Formation dates of `timescale` as dates.
pub fn formation_dates(calendar: &crate::market_data::TradingCalendar, timescale: Timescale) -> Vec<NaiveDate> {
    timescale
        .horizon()
        .formation_dates(calendar)
        .into_iter()
        .map(|i| calendar.date(i))
        .collect()
}

/// Ascending partition of the ranked universe. `groups[0]` is R1 (lowest
/// scores, losers) and the last group is RG (winners).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedGroups {
    pub formation_date: NaiveDate,
    /// Position of the formation date on the formation grid.
    pub formation_pos: usize,
    groups: Vec<Vec<SymbolId>>,
}

impl RankedGroups {
    pub fn new(formation_date: NaiveDate, formation_pos: usize, groups: Vec<Vec<SymbolId>>) -> Self {
        Self {
            formation_date,
            formation_pos,
            groups,
        }
    }

    pub fn groups(&self) -> &[Vec<SymbolId>] {
        &self.groups
    }

    pub fn loser(&self) -> &[SymbolId] {
        &self.groups[0]
    }

    pub fn winner(&self) -> &[SymbolId] {
        &self.groups[self.groups.len() - 1]
    }
}

/// Sorts `(symbol, score)` ascending (ties by symbol id, i.e. name order) and
/// splits into `groups` groups whose sizes differ by at most one; the
/// remainder goes one-per-group starting from R1. `None` when there are
/// fewer symbols than groups.
pub fn partition_ranked(mut scored: Vec<(SymbolId, f64)>, groups: usize) -> Option<Vec<Vec<SymbolId>>> {
    if groups == 0 || scored.len() < groups {
        return None;
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let base = scored.len() / groups;
    let extra = scored.len() % groups;
    let mut iter = scored.into_iter().map(|(id, _)| id);
    let out = (0..groups)
        .map(|g| {
            let size = base + usize::from(g < extra);
            iter.by_ref().take(size).collect()
        })
        .collect();
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Long,
    Short,
}

/// A dated dollar-neutral position set.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub formation_date: NaiveDate,
    pub formation_pos: usize,
    /// Grid position at which the cohort is closed (formation + K). May lie
    /// past the end of the panel, in which case `liquidation_date` is `None`.
    pub liquidation_pos: usize,
    pub liquidation_date: Option<NaiveDate>,
    pub long: Vec<(SymbolId, Weight)>,
    pub short: Vec<(SymbolId, Weight)>,
    /// Which side holds the winner group.
    pub winner_side: Side,
    pub entry_price_field: PriceField,
}

impl Cohort {
    pub fn net_weight(&self) -> Weight {
        self.long.iter().chain(&self.short).map(|(_, w)| *w).sum()
    }

    pub fn gross_weight(&self) -> Weight {
        self.long.iter().chain(&self.short).map(|(_, w)| if *w < Weight::from_integer(0) { -*w } else { *w }).sum()
    }

    pub fn winner_basket(&self) -> &[(SymbolId, Weight)] {
        match self.winner_side {
            Side::Long => &self.long,
            Side::Short => &self.short,
        }
    }

    pub fn loser_basket(&self) -> &[(SymbolId, Weight)] {
        match self.winner_side {
            Side::Long => &self.short,
            Side::Short => &self.long,
        }
    }
}

fn equal_weights(symbols: &[SymbolId], sign: i64) -> Vec<(SymbolId, Weight)> {
    let w = Ratio::new(sign, symbols.len() as i64);
    symbols.iter().map(|&s| (s, w)).collect()
}

/// Builds the cohort for `groups`: traditional goes long RG and short R1,
/// contrarian the reverse, each side equally weighted to ±1.
/// `grid_dates` are the formation-grid dates used to date the liquidation.
pub fn build_cohort(groups: &RankedGroups, config: &StrategyConfig, grid_dates: &[NaiveDate]) -> Cohort {
    let (long, short, winner_side) = match config.direction {
        Direction::Traditional => (groups.winner(), groups.loser(), Side::Long),
        Direction::Contrarian => (groups.loser(), groups.winner(), Side::Short),
    };
    let liquidation_pos = groups.formation_pos + config.holding;
    Cohort {
        formation_date: groups.formation_date,
        formation_pos: groups.formation_pos,
        liquidation_pos,
        liquidation_date: grid_dates.get(liquidation_pos).copied(),
        long: equal_weights(long, 1),
        short: equal_weights(short, -1),
        winner_side,
        entry_price_field: config.timescale.horizon().entry_field(),
    }
}

/// Panel plus the precomputed step view for one timescale. Shared across
/// every strategy of that timescale.
#[derive(Debug)]
pub struct FormationContext<'a> {
    panel: &'a AssetPanel,
    timescale: Timescale,
    grid_dates: Vec<NaiveDate>,
    view: StepView,
}

impl<'a> FormationContext<'a> {
    pub fn new(panel: &'a AssetPanel, timescale: Timescale) -> Self {
        Self::with_horizon(panel, timescale.horizon())
    }

    pub fn with_horizon(panel: &'a AssetPanel, horizon: &dyn Horizon) -> Self {
        let grid = horizon.formation_dates(panel.calendar());
        let grid_dates = grid.iter().map(|&i| panel.calendar().date(i)).collect();
        Self {
            panel,
            timescale: horizon.timescale(),
            grid_dates,
            view: StepView::build(panel, grid),
        }
    }

    pub fn panel(&self) -> &'a AssetPanel {
        self.panel
    }

    pub fn timescale(&self) -> Timescale {
        self.timescale
    }

    /// Calendar indices of the formation grid.
    pub fn grid(&self) -> &[usize] {
        self.view.grid()
    }

    pub fn grid_dates(&self) -> &[NaiveDate] {
        &self.grid_dates
    }

    /// First grid position at which a `lookback`-step window is available.
    pub fn first_formation(&self, lookback: usize, horizon: &dyn Horizon) -> usize {
        lookback + horizon.signal_lag()
    }

    /// Scores of every eligible symbol at grid position `pos`. A symbol is
    /// eligible when it is a member on the formation date, has every bar from
    /// the start of its lookback through the formation date, and its score
    /// is not excluded.
    pub fn scores(&self, strategy: &ResolvedStrategy, lookback: usize, pos: usize) -> Result<Vec<(SymbolId, f64)>> {
        let lag = strategy.horizon.signal_lag();
        if lookback == 0 || pos < lookback + lag || pos >= self.grid().len() {
            return Ok(Vec::new());
        }
        let last = pos - lag;
        let first = last + 1 - lookback;
        let grid = self.grid();
        let (span_start, span_end) = (grid[first - 1], grid[pos]);
        let date = self.grid_dates[pos];

        let mut masses = Vec::with_capacity(lookback);
        let mut out = Vec::with_capacity(self.panel.symbol_count());
        for id in self.panel.symbol_ids() {
            if !self.panel.is_member(id, date) || !self.panel.series(id).complete(span_start, span_end) {
                continue;
            }
            let steps = self.view.steps(id, first, last);
            let scored = strategy.mass.fill(&steps, &mut masses).and_then(|()| {
                let window = SignalWindow::new(id, pos, steps.velocities, &masses)?;
                strategy.momentum.score(&window)
            });
            match scored {
                Ok(s) => out.push((id, s)),
                Err(SignalError::Excluded(_)) => {}
                Err(e @ SignalError::Config(_)) => return Err(e.into()),
            }
        }
        Ok(out)
    }

    /// Ranks the eligible universe at grid position `pos`. `Ok(None)` when
    /// fewer than `groups` symbols are eligible; the formation is skipped.
    pub fn rank(&self, strategy: &ResolvedStrategy, config: &StrategyConfig, pos: usize) -> Result<Option<RankedGroups>> {
        let scored = self.scores(strategy, config.lookback, pos)?;
        let n = scored.len();
        match partition_ranked(scored, config.groups) {
            Some(groups) => Ok(Some(RankedGroups::new(self.grid_dates[pos], pos, groups))),
            None => {
                log::info!(
                    "{}: formation on {} skipped, {n} eligible symbols < {} groups",
                    config.id(),
                    self.grid_dates[pos],
                    config.groups
                );
                Ok(None)
            }
        }
    }
}

/// Ranks the universe on `formation_date` for `config` with the builtin
/// registry. Convenience wrapper that builds a fresh [`FormationContext`].
pub fn rank_universe(panel: &AssetPanel, config: &StrategyConfig, formation_date: NaiveDate) -> Result<Option<RankedGroups>> {
    config.validate()?;
    let strategy = StrategyRegistry::global().resolve(config)?;
    let ctx = FormationContext::with_horizon(panel, strategy.horizon.as_ref());
    let pos = ctx
        .grid_dates()
        .binary_search(&formation_date)
        .map_err(|_| Error::Config(format!("{formation_date} is not a {} formation date", config.timescale)))?;
    ctx.rank(&strategy, config, pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<SymbolId> {
        v.iter().map(|&i| SymbolId(i)).collect()
    }

    #[test]
    fn partition_sorts_ascending() {
        // A=0 B=1 C=2 with scores 3, 1, 2
        let g = partition_ranked(vec![(SymbolId(0), 3.0), (SymbolId(1), 1.0), (SymbolId(2), 2.0)], 3).unwrap();
        assert_eq!(g, vec![ids(&[1]), ids(&[2]), ids(&[0])]);
    }

    #[test]
    fn partition_fifty_groups_of_ten() {
        let scored: Vec<_> = (0..500u32).map(|i| (SymbolId(i), f64::from(i * 7 % 500))).collect();
        let g = partition_ranked(scored, 50).unwrap();
        assert_eq!(g.len(), 50);
        assert!(g.iter().all(|grp| grp.len() == 10));
    }

    #[test]
    fn partition_remainder_from_r1() {
        let scored: Vec<_> = (0..7u32).map(|i| (SymbolId(i), f64::from(i))).collect();
        let g = partition_ranked(scored, 3).unwrap();
        assert_eq!(g.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 2]);
        assert!(partition_ranked(vec![(SymbolId(0), 1.0)], 2).is_none());
    }

    #[test]
    fn partition_breaks_ties_by_symbol() {
        let a = vec![(SymbolId(2), 1.0), (SymbolId(0), 1.0), (SymbolId(1), 1.0), (SymbolId(3), 0.5)];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(partition_ranked(a, 2), partition_ranked(b, 2));
        assert_eq!(partition_ranked(vec![(SymbolId(2), 1.0), (SymbolId(0), 1.0)], 2).unwrap(), vec![ids(&[0]), ids(&[2])]);
    }

    fn config(direction: Direction, timescale: Timescale, holding: usize) -> StrategyConfig {
        StrategyConfig {
            momentum: MomentumKind::P1,
            mass: MassKind::TurnoverRate,
            timescale,
            lookback: 3,
            holding,
            direction,
            groups: 2,
        }
    }

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn traditional_and_contrarian_cohorts() {
        // R1 = {C, D}, R2 = {A, B}
        let groups = RankedGroups::new(d("2014-01-08"), 0, vec![ids(&[2, 3]), ids(&[0, 1])]);
        let grid = [d("2014-01-08"), d("2014-01-09")];
        let trad = build_cohort(&groups, &config(Direction::Traditional, Timescale::Day, 1), &grid);
        let half = Ratio::new(1, 2);
        assert_eq!(trad.long, vec![(SymbolId(0), half), (SymbolId(1), half)]);
        assert_eq!(trad.short, vec![(SymbolId(2), -half), (SymbolId(3), -half)]);
        assert_eq!(trad.liquidation_date, Some(d("2014-01-09")));
        assert_eq!(trad.entry_price_field, PriceField::Open);
        assert_eq!(trad.net_weight(), Ratio::from_integer(0));
        assert_eq!(trad.gross_weight(), Ratio::from_integer(2));

        let contra = build_cohort(&groups, &config(Direction::Contrarian, Timescale::Day, 1), &grid);
        let negated: Vec<_> = trad.short.iter().map(|(s, w)| (*s, -*w)).collect();
        assert_eq!(contra.long, negated);
        let negated: Vec<_> = trad.long.iter().map(|(s, w)| (*s, -*w)).collect();
        assert_eq!(contra.short, negated);
        assert_eq!(contra.winner_basket(), trad.winner_basket().iter().map(|(s, w)| (*s, -*w)).collect::<Vec<_>>());
    }

    #[test]
    fn non_daily_entry_at_close_and_liquidation_past_end() {
        let groups = RankedGroups::new(d("2014-01-01"), 0, vec![ids(&[0]), ids(&[1])]);
        let c = build_cohort(&groups, &config(Direction::Traditional, Timescale::Month, 3), &[d("2014-01-01")]);
        assert_eq!(c.entry_price_field, PriceField::Close);
        assert_eq!(c.liquidation_pos, 3);
        assert_eq!(c.liquidation_date, None);
    }

    #[test]
    fn validate_limits() {
        let mut c = config(Direction::Traditional, Timescale::Week, 1);
        c.lookback = 1;
        assert!(c.validate().is_err());
        c.lookback = 8;
        c.holding = 8;
        c.validate().unwrap();
        c.groups = 1;
        assert!(c.validate().is_err());
        let mut y = config(Direction::Traditional, Timescale::Year, 3);
        y.lookback = 5;
        y.validate().unwrap();
        y.mass = MassKind::InverseVolatility;
        assert!(y.validate().is_err());
    }

    #[test]
    fn ids_and_labels() {
        let c = StrategyConfig {
            momentum: MomentumKind::P2,
            mass: MassKind::InverseTurnover,
            timescale: Timescale::Day,
            lookback: 3,
            holding: 1,
            direction: Direction::Contrarian,
            groups: 50,
        };
        assert_eq!(c.id(), "day_p2_inv_turnover_J3_K1_contrarian");
        assert_eq!(c.portfolio_label(), "p2*(1/υ,R)");
    }
}
