//! Run configuration: command-line flags layered over an optional TOML file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use physmom_core::synth::SynthSpec;
use physmom_core::{CalendarPolicy, Direction, MassKind, MomentumKind, StrategyConfig, Timescale};
use serde::Deserialize;

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One strategy: a report and its wealth curve.
    Single,
    /// Every grid configuration of the requested timescales.
    Grid,
    /// Write a seeded synthetic panel to the data paths.
    Synth,
}

impl FromStr for Mode {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" => Ok(Mode::Single),
            "grid" => Ok(Mode::Grid),
            "synth" => Ok(Mode::Synth),
            other => Err(AppError::Config(format!("unknown mode `{other}` (single, grid, synth)"))),
        }
    }
}

/// Command-line flags. Every flag is optional here; required values are
/// checked once flags and the config file are merged.
#[derive(Debug, Default, Parser)]
#[command(name = "physmom", version, about = "Physical-momentum backtests over CSV market data")]
pub struct Args {
    /// TOML file with any of the options below; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// single, grid or synth.
    #[arg(long)]
    pub mode: Option<String>,
    /// Directory with one `<SYMBOL>.csv` per symbol.
    #[arg(long = "data-dir")]
    pub data_dir: Option<PathBuf>,
    /// Benchmark index CSV (`date,close`).
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    /// Optional membership CSV (`date,symbol,action`).
    #[arg(long)]
    pub membership: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// p1, p2 or p3.
    #[arg(long)]
    pub momentum: Option<String>,
    /// turnover, inv_turnover or inv_vol.
    #[arg(long)]
    pub mass: Option<String>,
    /// day, week, month or year; grid mode accepts a comma list.
    #[arg(long)]
    pub timescale: Option<String>,
    /// Lookback J in formation steps.
    #[arg(long = "J")]
    pub lookback: Option<usize>,
    /// Holding period K in formation steps.
    #[arg(long = "K")]
    pub holding: Option<usize>,
    /// traditional or contrarian.
    #[arg(long)]
    pub direction: Option<String>,
    /// Number of rank groups G.
    #[arg(long)]
    pub groups: Option<usize>,
    /// Monthly risk-free rate as a fraction.
    #[arg(long, allow_negative_numbers = true)]
    pub rf: Option<f64>,
    /// union or intersection.
    #[arg(long = "calendar-policy")]
    pub calendar_policy: Option<String>,
    /// Synthetic generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic symbol count.
    #[arg(long)]
    pub symbols: Option<usize>,
    /// Synthetic trading-day count.
    #[arg(long)]
    pub days: Option<usize>,
    /// Synthetic probability of dropping a bar.
    #[arg(long = "gap-probability")]
    pub gap_probability: Option<f64>,
}

/// Contents of the `--config` file. Keys mirror the long flag names with
/// dashes replaced by underscores; `J` and `K` keep their case. Generator
/// settings go in a `[synth]` table.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub membership: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub momentum: Option<String>,
    pub mass: Option<String>,
    pub timescale: Option<String>,
    #[serde(rename = "J")]
    pub lookback: Option<usize>,
    #[serde(rename = "K")]
    pub holding: Option<usize>,
    pub direction: Option<String>,
    pub groups: Option<usize>,
    pub rf: Option<f64>,
    pub calendar_policy: Option<String>,
    pub seed: Option<u64>,
    pub synth: Option<SynthSpec>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| AppError::Config(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub data_dir: PathBuf,
    pub benchmark: PathBuf,
    pub membership: Option<PathBuf>,
    pub out: PathBuf,
    /// Set in single mode.
    pub strategy: Option<StrategyConfig>,
    /// Timescales swept in grid mode.
    pub timescales: Vec<Timescale>,
    pub groups: usize,
    pub rf: f64,
    pub calendar_policy: CalendarPolicy,
    pub synth: SynthSpec,
}

fn parse<T>(value: &str) -> Result<T, AppError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| AppError::Config(e.to_string()))
}

fn parse_timescales(value: &str) -> Result<Vec<Timescale>, AppError> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let ts = parse(part)?;
        if !out.contains(&ts) {
            out.push(ts);
        }
    }
    if out.is_empty() {
        return Err(AppError::Config("empty timescale list".into()));
    }
    Ok(out)
}

fn required<T>(value: Option<T>, name: &str, mode: &str) -> Result<T, AppError> {
    value.ok_or_else(|| AppError::Config(format!("{mode} mode needs --{name}")))
}

impl RunConfig {
    /// Merges `args` over the file named by `--config`, if any.
    pub fn from_args(args: Args) -> Result<Self, AppError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(args, file)
    }

    pub fn merge(args: Args, file: FileConfig) -> Result<Self, AppError> {
        let mode: Mode = match args.mode.or(file.mode) {
            Some(m) => parse(&m)?,
            None => Mode::Single,
        };
        let mode_name = match mode {
            Mode::Single => "single",
            Mode::Grid => "grid",
            Mode::Synth => "synth",
        };
        let data_dir = required(args.data_dir.or(file.data_dir), "data-dir", mode_name)?;
        let benchmark = required(args.benchmark.or(file.benchmark), "benchmark", mode_name)?;
        let membership = args.membership.or(file.membership);
        let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("out"));
        let groups = args.groups.or(file.groups).unwrap_or(physmom_core::portfolio::DEFAULT_GROUPS);
        if groups < 2 {
            return Err(AppError::Config(format!("need at least 2 groups, got {groups}")));
        }
        let rf = args.rf.or(file.rf).unwrap_or(0.0);
        if !rf.is_finite() || rf <= -1.0 {
            return Err(AppError::Config(format!("risk-free rate {rf} is not a usable monthly rate")));
        }
        let calendar_policy = match args.calendar_policy.or(file.calendar_policy) {
            Some(p) => parse(&p)?,
            None => CalendarPolicy::Union,
        };
        let timescale = args.timescale.or(file.timescale);
        let timescales = match &timescale {
            Some(t) => parse_timescales(t)?,
            None => vec![Timescale::Day, Timescale::Week, Timescale::Month, Timescale::Year],
        };

        let strategy = if mode == Mode::Single {
            if timescales.len() != 1 || timescale.is_none() {
                return Err(AppError::Config("single mode needs exactly one --timescale".into()));
            }
            let direction = match args.direction.or(file.direction) {
                Some(d) => parse(&d)?,
                None => Direction::Traditional,
            };
            let config = StrategyConfig {
                momentum: parse::<MomentumKind>(&required(args.momentum.or(file.momentum), "momentum", mode_name)?)?,
                mass: parse::<MassKind>(&required(args.mass.or(file.mass), "mass", mode_name)?)?,
                timescale: timescales[0],
                lookback: required(args.lookback.or(file.lookback), "J", mode_name)?,
                holding: required(args.holding.or(file.holding), "K", mode_name)?,
                direction,
                groups,
            };
            config.validate()?;
            Some(config)
        } else {
            None
        };

        let mut synth = file.synth.unwrap_or_default();
        if let Some(seed) = args.seed.or(file.seed) {
            synth.seed = seed;
        }
        if let Some(n) = args.symbols {
            synth.symbols = n;
        }
        if let Some(n) = args.days {
            synth.days = n;
        }
        if let Some(p) = args.gap_probability {
            synth.gap_probability = p;
        }
        if mode == Mode::Synth {
            synth.validate()?;
        }

        Ok(Self {
            mode,
            data_dir,
            benchmark,
            membership,
            out,
            strategy,
            timescales,
            groups,
            rf,
            calendar_policy,
            synth,
        })
    }
}
