//! Seeded synthetic market: geometric random-walk prices with per-symbol
//! drift and volatility, lognormal volume, constant shares outstanding.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{AssetPanel, Bar, CalendarPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub symbols: usize,
    /// Trading days (weekdays) starting at `start`.
    pub days: usize,
    pub start: NaiveDate,
    /// Per-day log drift range; each symbol draws uniformly from it.
    pub drift: (f64, f64),
    /// Per-day volatility range.
    pub volatility: (f64, f64),
    /// Overnight gap volatility as a fraction of the symbol's volatility.
    pub open_noise: f64,
    pub volume_median: f64,
    pub volume_sigma: f64,
    pub shares_outstanding: (f64, f64),
    /// Probability that any one bar is dropped, producing gaps.
    pub gap_probability: f64,
    pub benchmark_drift: f64,
    pub benchmark_volatility: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            symbols: 10,
            days: 60,
            start: NaiveDate::from_ymd_opt(2014, 1, 1).expect("valid date"),
            drift: (-0.001, 0.001),
            volatility: (0.01, 0.03),
            open_noise: 0.3,
            volume_median: 200_000.0,
            volume_sigma: 0.5,
            shares_outstanding: (1.0e6, 5.0e7),
            gap_probability: 0.0,
            benchmark_drift: 0.0003,
            benchmark_volatility: 0.01,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("synthetic spec: {msg}")));
        if self.symbols == 0 {
            return bad("need at least one symbol");
        }
        if self.days < 2 {
            return bad("need at least two days");
        }
        if self.drift.0 > self.drift.1 || !self.drift.0.is_finite() || !self.drift.1.is_finite() {
            return bad("drift range must be finite and ordered");
        }
        if !(0.0 <= self.volatility.0 && self.volatility.0 <= self.volatility.1 && self.volatility.1.is_finite()) {
            return bad("volatility range must be non-negative and ordered");
        }
        if !(self.open_noise >= 0.0 && self.volume_sigma >= 0.0 && self.benchmark_volatility >= 0.0) {
            return bad("noise parameters must be non-negative");
        }
        if self.volume_median.is_nan() || self.volume_median <= 0.0 {
            return bad("volume median must be positive");
        }
        if !(1.0 <= self.shares_outstanding.0 && self.shares_outstanding.0 <= self.shares_outstanding.1) {
            return bad("shares outstanding range must be >= 1 and ordered");
        }
        if !(0.0..1.0).contains(&self.gap_probability) {
            return bad("gap probability must be in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub bars: BTreeMap<String, Vec<Bar>>,
    pub benchmark: Vec<(NaiveDate, f64)>,
}

fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Generates the market described by `spec`. Identical specs give identical
/// output.
pub fn generate(spec: &SynthSpec) -> Result<SyntheticMarket> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let volume_dist = LogNormal::new(spec.volume_median.ln(), spec.volume_sigma)
        .map_err(|e| Error::Config(format!("volume distribution: {e}")))?;
    let dates = weekdays(spec.start, spec.days);
    let width = spec.symbols.to_string().len().max(3);

    let mut bars = BTreeMap::new();
    for s in 0..spec.symbols {
        let drift = uniform(&mut rng, spec.drift);
        let vol = uniform(&mut rng, spec.volatility);
        let shares = uniform(&mut rng, spec.shares_outstanding).round().max(1.0);
        let mut close: f64 = rng.random_range(20.0..200.0);
        let mut seq = Vec::with_capacity(dates.len());
        for (i, date) in dates.iter().enumerate() {
            let prev = close;
            let (z, z_open): (f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng));
            let open = if i == 0 {
                prev
            } else {
                close = prev * (drift - 0.5 * vol * vol + vol * z).exp();
                prev * (spec.open_noise * vol * z_open).exp()
            };
            let volume = volume_dist.sample(&mut rng).round();
            let dropped = spec.gap_probability > 0.0 && rng.random::<f64>() < spec.gap_probability;
            if !dropped {
                seq.push(Bar {
                    date: *date,
                    open,
                    close,
                    volume,
                    shares_outstanding: shares,
                });
            }
        }
        bars.insert(format!("S{s:0width$}"), seq);
    }

    let mut level = 1000.0;
    let mut benchmark = Vec::with_capacity(dates.len());
    for (i, date) in dates.iter().enumerate() {
        if i > 0 {
            let z: f64 = normal.sample(&mut rng);
            let v = spec.benchmark_volatility;
            level *= (spec.benchmark_drift - 0.5 * v * v + v * z).exp();
        }
        benchmark.push((*date, level));
    }
    Ok(SyntheticMarket { bars, benchmark })
}

impl SyntheticMarket {
    pub fn into_panel(self, policy: CalendarPolicy) -> Result<AssetPanel> {
        AssetPanel::from_bars(self.bars, self.benchmark, policy)
    }

    /// Writes one CSV per symbol into `data_dir` plus the benchmark file.
    pub fn write(&self, data_dir: &Path, benchmark_file: &Path) -> Result<()> {
        // Union keeps every generated bar, so the written files are exact.
        let panel = AssetPanel::from_bars(self.bars.clone(), self.benchmark.clone(), CalendarPolicy::Union)?;
        panel.write_csv(data_dir, benchmark_file)
    }
}

/// Generates and writes the market to disk.
pub fn synth_panel(spec: &SynthSpec, data_dir: &Path, benchmark_file: &Path) -> Result<()> {
    generate(spec)?.write(data_dir, benchmark_file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_market() {
        let spec = SynthSpec::default();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn zero_vol_zero_drift_is_flat() {
        let spec = SynthSpec {
            drift: (0.0, 0.0),
            volatility: (0.0, 0.0),
            ..SynthSpec::default()
        };
        let m = generate(&spec).unwrap();
        for seq in m.bars.values() {
            assert!(seq.iter().all(|b| b.close == seq[0].close && b.open == seq[0].close));
        }
    }

    #[test]
    fn bars_are_valid_and_on_weekdays() {
        let m = generate(&SynthSpec {
            gap_probability: 0.05,
            ..SynthSpec::default()
        })
        .unwrap();
        for seq in m.bars.values() {
            for b in seq {
                b.validate().unwrap();
                assert!(!matches!(b.date.weekday(), Weekday::Sat | Weekday::Sun));
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate(&SynthSpec { symbols: 0, ..SynthSpec::default() }).is_err());
        assert!(generate(&SynthSpec { volatility: (0.02, 0.01), ..SynthSpec::default() }).is_err());
        assert!(generate(&SynthSpec { gap_probability: 1.0, ..SynthSpec::default() }).is_err());
    }
}
