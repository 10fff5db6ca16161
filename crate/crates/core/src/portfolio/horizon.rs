//! Formation schedules for the four timescales.

use std::fmt::{self, Debug};
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{CalendarPeriod, PriceField, TradingCalendar};
use crate::signals::MomentumKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timescale {
    Day,
    Week,
    Month,
    Year,
}

impl Timescale {
    pub const ALL: [Timescale; 4] = [Timescale::Day, Timescale::Week, Timescale::Month, Timescale::Year];

    pub fn name(self) -> &'static str {
        match self {
            Timescale::Day => "day",
            Timescale::Week => "week",
            Timescale::Month => "month",
            Timescale::Year => "year",
        }
    }

    pub fn horizon(self) -> &'static dyn Horizon {
        match self {
            Timescale::Day => &Daily,
            Timescale::Week => &Weekly,
            Timescale::Month => &Monthly,
            Timescale::Year => &Yearly,
        }
    }
}

impl fmt::Display for Timescale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Timescale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Timescale::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown timescale '{s}' (day|week|month|year)")))
    }
}

/// Formation and liquidation conventions of one timescale.
pub trait Horizon: Send + Sync + Debug {
    fn timescale(&self) -> Timescale;

    fn name(&self) -> &'static str {
        self.timescale().name()
    }

    /// Calendar indices on which cohorts are formed.
    fn formation_dates(&self, calendar: &TradingCalendar) -> Vec<usize>;

    fn lookback_range(&self, momentum: MomentumKind) -> RangeInclusive<usize>;

    fn holding_range(&self) -> RangeInclusive<usize>;

    fn admits(&self, lookback: usize, holding: usize, momentum: MomentumKind) -> bool {
        self.lookback_range(momentum).contains(&lookback) && self.holding_range().contains(&holding)
    }

    /// Price at which a new cohort is entered on its formation date.
    fn entry_field(&self) -> PriceField {
        PriceField::Close
    }

    /// Grid steps between the last lookback step and the formation date.
    /// Entering at the open means the formation day's close is not yet known.
    fn signal_lag(&self) -> usize {
        match self.entry_field() {
            PriceField::Open => 1,
            PriceField::Close => 0,
        }
    }

    /// Whole calendar years dropped from the start of the benchmark
    /// comparison window.
    fn benchmark_warmup_years(&self) -> i32 {
        0
    }
}

/// Every trading day; entered at the open, liquidated at the close.
#[derive(Debug, Clone, Copy, Default)]
pub struct Daily;

impl Horizon for Daily {
    fn timescale(&self) -> Timescale {
        Timescale::Day
    }

    fn formation_dates(&self, calendar: &TradingCalendar) -> Vec<usize> {
        (0..calendar.len()).collect()
    }

    fn lookback_range(&self, momentum: MomentumKind) -> RangeInclusive<usize> {
        match momentum {
            MomentumKind::P3 => 2..=7,
            _ => 1..=7,
        }
    }

    fn holding_range(&self) -> RangeInclusive<usize> {
        1..=7
    }

    fn entry_field(&self) -> PriceField {
        PriceField::Open
    }
}

/// First trading day of every ISO week.
#[derive(Debug, Clone, Copy, Default)]
pub struct Weekly;

impl Horizon for Weekly {
    fn timescale(&self) -> Timescale {
        Timescale::Week
    }

    fn formation_dates(&self, calendar: &TradingCalendar) -> Vec<usize> {
        calendar.first_trading_days(CalendarPeriod::Week).to_vec()
    }

    fn lookback_range(&self, _: MomentumKind) -> RangeInclusive<usize> {
        2..=8
    }

    fn holding_range(&self) -> RangeInclusive<usize> {
        1..=8
    }
}

/// First trading day of every calendar month.
#[derive(Debug, Clone, Copy, Default)]
pub struct Monthly;

impl Horizon for Monthly {
    fn timescale(&self) -> Timescale {
        Timescale::Month
    }

    fn formation_dates(&self, calendar: &TradingCalendar) -> Vec<usize> {
        calendar.first_trading_days(CalendarPeriod::Month).to_vec()
    }

    fn lookback_range(&self, _: MomentumKind) -> RangeInclusive<usize> {
        3..=12
    }

    fn holding_range(&self) -> RangeInclusive<usize> {
        1..=12
    }

    fn benchmark_warmup_years(&self) -> i32 {
        1
    }
}

/// First trading day of every calendar year.
#[derive(Debug, Clone, Copy, Default)]
pub struct Yearly;

/// Longest lookback + holding span tested on the yearly grid.
pub const MAX_YEARLY_SPAN: usize = 8;

impl Horizon for Yearly {
    fn timescale(&self) -> Timescale {
        Timescale::Year
    }

    fn formation_dates(&self, calendar: &TradingCalendar) -> Vec<usize> {
        calendar.first_trading_days(CalendarPeriod::Year).to_vec()
    }

    fn lookback_range(&self, _: MomentumKind) -> RangeInclusive<usize> {
        2..=5
    }

    fn holding_range(&self) -> RangeInclusive<usize> {
        1..=3
    }

    fn admits(&self, lookback: usize, holding: usize, momentum: MomentumKind) -> bool {
        self.lookback_range(momentum).contains(&lookback)
            && self.holding_range().contains(&holding)
            && lookback + holding <= MAX_YEARLY_SPAN
    }

    // Comparison starts in the fifth calendar year of data.
    fn benchmark_warmup_years(&self) -> i32 {
        4
    }
}
