//! Cross-sectional physical-momentum backtesting.
//!
//! Symbols are scored by a mass-weighted velocity measure over a lookback
//! window, ranked into groups, and the extreme groups are held as
//! dollar-neutral long-short cohorts with overlapping holding periods. The
//! resulting zero-cost wealth curve is reduced to return and risk statistics
//! against a benchmark index.
//!
//! Interchangeable pieces (momentum measures, mass models, timescale
//! horizons) sit behind traits and are looked up by name in a
//! [`registry::StrategyRegistry`].

pub mod analytics;
pub mod backtest;
pub mod error;
pub mod market_data;
pub mod portfolio;
pub mod registry;
pub mod signals;
pub mod synth;

pub use analytics::{risk_report, RiskReport};
pub use backtest::{formation_ranks, run_backtest, run_in_context, run_ranked, BacktestResult, FormationRanks};
pub use error::{Error, Result};
pub use market_data::{load_panel, AssetPanel, CalendarPolicy};
pub use portfolio::{enumerate_grid, Direction, StrategyConfig, Timescale};
pub use registry::StrategyRegistry;
pub use signals::{MassKind, MomentumKind};
