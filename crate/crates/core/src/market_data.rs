//! Market-data ingestion: per-symbol bar files and a benchmark close series
//! aligned onto one shared trading calendar.
//!
//! The panel is columnar. Each symbol carries one column per field plus a
//! presence mask; missing slots hold `NaN` and are never read by the signal
//! or accounting code, which gates every access on the mask.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";
pub const BAR_HEADER: [&str; 5] = ["date", "open", "close", "volume", "shares_outstanding"];
pub const BENCHMARK_HEADER: [&str; 2] = ["date", "close"];
pub const MEMBERSHIP_HEADER: [&str; 3] = ["date", "symbol", "action"];

/// Natural logarithm of a strictly positive price.
pub fn log_price(price: f64) -> Result<f64> {
    if price > 0.0 && price.is_finite() {
        Ok(price.ln())
    } else {
        Err(Error::Domain(format!("log price of non-positive value {price}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CalendarPeriod {
    /// ISO week.
    Week,
    Month,
    Year,
}

/// Ordered trading dates with a reverse index and the first trading day of
/// every week, month and year.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
    index: HashMap<NaiveDate, usize>,
    week_starts: Vec<usize>,
    month_starts: Vec<usize>,
    year_starts: Vec<usize>,
}

impl TradingCalendar {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!(
                "calendar dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let index = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        let starts = |key: fn(&NaiveDate) -> (i32, u32)| -> Vec<usize> {
            let mut out = Vec::new();
            let mut last = None;
            for (i, d) in dates.iter().enumerate() {
                let k = key(d);
                if last != Some(k) {
                    out.push(i);
                    last = Some(k);
                }
            }
            out
        };
        let week_starts = starts(|d| {
            let w = d.iso_week();
            (w.year(), w.week())
        });
        let month_starts = starts(|d| (d.year(), d.month()));
        let year_starts = starts(|d| (d.year(), 0));
        Ok(Self {
            dates,
            index,
            week_starts,
            month_starts,
            year_starts,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.dates[index]
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.index.get(&date).copied()
    }

    /// Calendar indices of the first trading day of every period.
    pub fn first_trading_days(&self, period: CalendarPeriod) -> &[usize] {
        match period {
            CalendarPeriod::Week => &self.week_starts,
            CalendarPeriod::Month => &self.month_starts,
            CalendarPeriod::Year => &self.year_starts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub close: f64,
    pub volume: f64,
    pub shares_outstanding: f64,
}

impl Bar {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.open) || !positive(self.close) {
            return Err(Error::Domain(format!(
                "non-positive price on {} (open {}, close {})",
                self.date, self.open, self.close
            )));
        }
        if !positive(self.shares_outstanding) {
            return Err(Error::Domain(format!(
                "non-positive shares outstanding on {}: {}",
                self.date, self.shares_outstanding
            )));
        }
        if !(self.volume >= 0.0 && self.volume.is_finite()) {
            return Err(Error::Domain(format!(
                "negative volume on {}: {}",
                self.date, self.volume
            )));
        }
        Ok(())
    }
}

/// Index of a symbol inside an [`AssetPanel`]. Symbols are stored in
/// lexicographic order, so id order is name order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceField {
    Open,
    Close,
}

/// One symbol's columns, aligned to the calendar.
#[derive(Debug, Clone)]
pub struct SymbolSeries {
    open: Vec<f64>,
    close: Vec<f64>,
    volume: Vec<f64>,
    shares_outstanding: Vec<f64>,
    present: Vec<bool>,
    // missing_before[i] = number of missing slots in 0..i
    missing_before: Vec<u32>,
}

impl SymbolSeries {
    fn with_len(n: usize) -> Self {
        Self {
            open: vec![f64::NAN; n],
            close: vec![f64::NAN; n],
            volume: vec![f64::NAN; n],
            shares_outstanding: vec![f64::NAN; n],
            present: vec![false; n],
            missing_before: Vec::new(),
        }
    }

    fn set(&mut self, i: usize, bar: &Bar) {
        self.open[i] = bar.open;
        self.close[i] = bar.close;
        self.volume[i] = bar.volume;
        self.shares_outstanding[i] = bar.shares_outstanding;
        self.present[i] = true;
    }

    fn finish(&mut self) {
        let mut acc = 0u32;
        self.missing_before = Vec::with_capacity(self.present.len() + 1);
        self.missing_before.push(0);
        for &p in &self.present {
            acc += u32::from(!p);
            self.missing_before.push(acc);
        }
    }

    pub fn is_present(&self, i: usize) -> bool {
        self.present[i]
    }

    /// True when every slot in `from..=to` holds a bar.
    pub fn complete(&self, from: usize, to: usize) -> bool {
        from <= to && self.missing_before[to + 1] == self.missing_before[from]
    }

    pub fn missing_count(&self) -> usize {
        *self.missing_before.last().unwrap_or(&0) as usize
    }

    pub fn price(&self, i: usize, field: PriceField) -> Option<f64> {
        if !self.present[i] {
            return None;
        }
        Some(match field {
            PriceField::Open => self.open[i],
            PriceField::Close => self.close[i],
        })
    }

    pub fn close(&self, i: usize) -> Option<f64> {
        self.price(i, PriceField::Close)
    }

    pub fn bar(&self, i: usize, date: NaiveDate) -> Option<Bar> {
        self.present[i].then(|| Bar {
            date,
            open: self.open[i],
            close: self.close[i],
            volume: self.volume[i],
            shares_outstanding: self.shares_outstanding[i],
        })
    }

    /// Raw columns, `NaN` where missing. Callers must gate on the mask.
    pub(crate) fn raw_close(&self) -> &[f64] {
        &self.close
    }

    pub(crate) fn raw_volume(&self) -> &[f64] {
        &self.volume
    }

    pub(crate) fn raw_shares(&self) -> &[f64] {
        &self.shares_outstanding
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalendarPolicy {
    /// Every date seen in any symbol file; gaps become missing markers.
    Union,
    /// Only dates present in every symbol file and in the benchmark.
    Intersection,
}

impl FromStr for CalendarPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "union" => Ok(Self::Union),
            "intersection" => Ok(Self::Intersection),
            other => Err(Error::Config(format!("unknown calendar policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MembershipAction {
    Add,
    Drop,
}

/// Universe membership changes. A symbol is a member on a date when its
/// latest action dated on or before that date is `ADD`; symbols that never
/// appear in the file are never members.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Membership {
    events: HashMap<String, Vec<(NaiveDate, MembershipAction)>>,
}

impl Membership {
    pub fn new(mut events: Vec<(NaiveDate, String, MembershipAction)>) -> Self {
        events.sort_by_key(|e| e.0);
        let mut map: HashMap<String, Vec<(NaiveDate, MembershipAction)>> = HashMap::new();
        for (date, symbol, action) in events {
            map.entry(symbol).or_default().push((date, action));
        }
        Self { events: map }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = open_csv(path, &MEMBERSHIP_HEADER)?;
        let mut events = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            let line = record_line(&record);
            let date = parse_date(path, line, &record[0])?;
            let action = match record[2].trim() {
                "ADD" => MembershipAction::Add,
                "DROP" => MembershipAction::Drop,
                other => {
                    return Err(Error::MalformedRow {
                        file: path.to_path_buf(),
                        line,
                        message: format!("action must be ADD or DROP, got '{other}'"),
                    })
                }
            };
            events.push((date, record[1].trim().to_string(), action));
        }
        Ok(Self::new(events))
    }

    pub fn is_member(&self, symbol: &str, date: NaiveDate) -> bool {
        self.events
            .get(symbol)
            .and_then(|ev| ev.iter().rev().find(|(d, _)| *d <= date))
            .is_some_and(|(_, a)| *a == MembershipAction::Add)
    }
}

/// Aligned, immutable panel of per-symbol bars plus the benchmark series.
#[derive(Debug, Clone)]
pub struct AssetPanel {
    symbols: Vec<String>,
    calendar: TradingCalendar,
    series: Vec<SymbolSeries>,
    benchmark: Vec<Option<f64>>,
    membership: Option<Membership>,
}

impl AssetPanel {
    /// Aligns in-memory bar sequences. Bars must already satisfy
    /// [`Bar::validate`]; duplicate dates within a symbol are rejected.
    pub fn from_bars(
        bars: BTreeMap<String, Vec<Bar>>,
        benchmark: Vec<(NaiveDate, f64)>,
        policy: CalendarPolicy,
    ) -> Result<Self> {
        if bars.is_empty() {
            return Err(Error::EmptyUniverse(PathBuf::from("<memory>")));
        }
        for (symbol, seq) in &bars {
            let mut seen = BTreeSet::new();
            for bar in seq {
                bar.validate()?;
                if !seen.insert(bar.date) {
                    return Err(Error::Data(format!("{symbol}: duplicate date {}", bar.date)));
                }
            }
        }
        let mut bench_seen = BTreeSet::new();
        for (date, close) in &benchmark {
            if !(*close > 0.0 && close.is_finite()) {
                return Err(Error::Domain(format!("non-positive benchmark close on {date}")));
            }
            if !bench_seen.insert(*date) {
                return Err(Error::Data(format!("benchmark: duplicate date {date}")));
            }
        }

        let dates: Vec<NaiveDate> = match policy {
            CalendarPolicy::Union => {
                let all: BTreeSet<NaiveDate> =
                    bars.values().flat_map(|s| s.iter().map(|b| b.date)).collect();
                all.into_iter().collect()
            }
            CalendarPolicy::Intersection => {
                let mut common = bench_seen.clone();
                for seq in bars.values() {
                    let own: BTreeSet<NaiveDate> = seq.iter().map(|b| b.date).collect();
                    common = common.intersection(&own).copied().collect();
                }
                common.into_iter().collect()
            }
        };
        if dates.is_empty() {
            return Err(Error::Data("calendar is empty after alignment".into()));
        }
        let calendar = TradingCalendar::new(dates)?;
        let n = calendar.len();

        let mut symbols = Vec::with_capacity(bars.len());
        let mut series = Vec::with_capacity(bars.len());
        for (symbol, seq) in bars {
            let mut s = SymbolSeries::with_len(n);
            for bar in &seq {
                if let Some(i) = calendar.index_of(bar.date) {
                    s.set(i, bar);
                }
            }
            s.finish();
            symbols.push(symbol);
            series.push(s);
        }

        let mut bench = vec![None; n];
        for (date, close) in benchmark {
            if let Some(i) = calendar.index_of(date) {
                bench[i] = Some(close);
            }
        }

        Ok(Self {
            symbols,
            calendar,
            series,
            benchmark: bench,
            membership: None,
        })
    }

    /// Attaches a membership table. Consumes the panel so the result is
    /// still constructed once and never mutated afterwards.
    pub fn with_membership(mut self, membership: Membership) -> Self {
        self.membership = Some(membership);
        self
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol_ids(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.symbols.len() as u32).map(SymbolId)
    }

    pub fn symbol_name(&self, id: SymbolId) -> &str {
        &self.symbols[id.index()]
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.symbols
            .binary_search_by(|s| s.as_str().cmp(name))
            .ok()
            .map(|i| SymbolId(i as u32))
    }

    pub fn series(&self, id: SymbolId) -> &SymbolSeries {
        &self.series[id.index()]
    }

    pub fn benchmark(&self) -> &[Option<f64>] {
        &self.benchmark
    }

    pub fn membership(&self) -> Option<&Membership> {
        self.membership.as_ref()
    }

    pub fn is_member(&self, id: SymbolId, date: NaiveDate) -> bool {
        self.membership
            .as_ref()
            .is_none_or(|m| m.is_member(self.symbol_name(id), date))
    }

    pub fn missing_count(&self) -> usize {
        self.series.iter().map(SymbolSeries::missing_count).sum()
    }

    /// Benchmark closes rebased to 1 at the first available date in
    /// `from..=to`.
    pub fn benchmark_wealth(&self, from: NaiveDate, to: NaiveDate) -> Vec<(NaiveDate, f64)> {
        let mut out = Vec::new();
        let mut base = None;
        for (i, close) in self.benchmark.iter().enumerate() {
            let date = self.calendar.date(i);
            if date < from || date > to {
                continue;
            }
            if let Some(c) = close {
                let b = *base.get_or_insert(*c);
                out.push((date, c / b));
            }
        }
        out
    }

    /// Writes the panel back out in the ingestion format. Only present bars
    /// are written, so reloading under the union policy reproduces the panel.
    pub fn write_csv(&self, data_dir: &Path, benchmark_file: &Path) -> Result<()> {
        fs::create_dir_all(data_dir).map_err(|e| Error::io(data_dir, e))?;
        for (symbol, series) in self.symbols.iter().zip(&self.series) {
            let path = data_dir.join(format!("{symbol}.csv"));
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
            w.write_record(BAR_HEADER).map_err(|e| Error::csv(&path, e))?;
            for (i, date) in self.calendar.dates().iter().enumerate() {
                if let Some(bar) = series.bar(i, *date) {
                    w.write_record([
                        date.format(DATE_FORMAT).to_string(),
                        bar.open.to_string(),
                        bar.close.to_string(),
                        bar.volume.to_string(),
                        bar.shares_outstanding.to_string(),
                    ])
                    .map_err(|e| Error::csv(&path, e))?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        let mut w =
            csv::Writer::from_path(benchmark_file).map_err(|e| Error::csv(benchmark_file, e))?;
        w.write_record(BENCHMARK_HEADER)
            .map_err(|e| Error::csv(benchmark_file, e))?;
        for (i, close) in self.benchmark.iter().enumerate() {
            if let Some(c) = close {
                w.write_record([
                    self.calendar.date(i).format(DATE_FORMAT).to_string(),
                    c.to_string(),
                ])
                .map_err(|e| Error::csv(benchmark_file, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(benchmark_file, e))?;
        Ok(())
    }
}

impl fmt::Display for AssetPanel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} symbols x {} dates ({} missing)",
            self.symbols.len(),
            self.calendar.len(),
            self.missing_count()
        )
    }
}

/// Loads every `*.csv` in `data_dir` as one symbol (file stem = symbol) and
/// aligns them with the benchmark under `policy`.
pub fn load_panel(
    data_dir: &Path,
    benchmark_file: &Path,
    policy: CalendarPolicy,
) -> Result<AssetPanel> {
    let entries = fs::read_dir(data_dir).map_err(|e| Error::io(data_dir, e))?;
    let skip = fs::canonicalize(benchmark_file).ok();
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(data_dir, e))?.path();
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if !is_csv || !path.is_file() {
            continue;
        }
        if skip.is_some() && fs::canonicalize(&path).ok() == skip {
            continue;
        }
        files.push(path);
    }
    if files.is_empty() {
        return Err(Error::EmptyUniverse(data_dir.to_path_buf()));
    }
    files.sort();

    let parsed: Vec<(String, Vec<Bar>)> = files
        .par_iter()
        .map(|path| {
            let symbol = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            read_bars(path).map(|bars| (symbol, bars))
        })
        .collect::<Result<_>>()?;

    let mut bars = BTreeMap::new();
    for (symbol, seq) in parsed {
        if seq.is_empty() {
            log::warn!("{symbol}: no valid rows, dropped from universe");
            continue;
        }
        bars.insert(symbol, seq);
    }
    if bars.is_empty() {
        return Err(Error::EmptyUniverse(data_dir.to_path_buf()));
    }
    let benchmark = read_benchmark(benchmark_file)?;
    AssetPanel::from_bars(bars, benchmark, policy)
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader.headers().map_err(|e| Error::csv(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::MalformedRow {
            file: path.to_path_buf(),
            line: 1,
            message: format!(
                "header must be '{}', got '{}'",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(reader)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_date(path: &Path, line: u64, raw: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw, DATE_FORMAT).map_err(|e| Error::MalformedRow {
        file: path.to_path_buf(),
        line,
        message: format!("bad date '{raw}': {e}"),
    })
}

fn parse_number(path: &Path, line: u64, column: &str, raw: &str) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::MalformedRow {
            file: path.to_path_buf(),
            line,
            message: format!("bad {column} '{raw}'"),
        }),
    }
}

fn read_bars(path: &Path) -> Result<Vec<Bar>> {
    let mut reader = open_csv(path, &BAR_HEADER)?;
    let mut bars: Vec<Bar> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record_line(&record);
        if record.len() != BAR_HEADER.len() {
            return Err(Error::MalformedRow {
                file: path.to_path_buf(),
                line,
                message: format!("expected {} fields, got {}", BAR_HEADER.len(), record.len()),
            });
        }
        let bar = Bar {
            date: parse_date(path, line, &record[0])?,
            open: parse_number(path, line, "open", &record[1])?,
            close: parse_number(path, line, "close", &record[2])?,
            volume: parse_number(path, line, "volume", &record[3])?,
            shares_outstanding: parse_number(path, line, "shares_outstanding", &record[4])?,
        };
        if let Err(e) = bar.validate() {
            log::warn!("{}:{line}: row rejected: {e}", path.display());
            continue;
        }
        bars.push(bar);
    }
    bars.sort_by_key(|b| b.date);
    if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(Error::MalformedRow {
            file: path.to_path_buf(),
            line: 0,
            message: format!("duplicate date {}", w[0].date),
        });
    }
    Ok(bars)
}

fn read_benchmark(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let mut reader = open_csv(path, &BENCHMARK_HEADER)?;
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record_line(&record);
        if record.len() != BENCHMARK_HEADER.len() {
            return Err(Error::MalformedRow {
                file: path.to_path_buf(),
                line,
                message: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let date = parse_date(path, line, &record[0])?;
        let close = parse_number(path, line, "close", &record[1])?;
        if close <= 0.0 {
            log::warn!("{}:{line}: row rejected: non-positive close {close}", path.display());
            continue;
        }
        points.push((date, close));
    }
    points.sort_by_key(|p| p.0);
    if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::MalformedRow {
            file: path.to_path_buf(),
            line: 0,
            message: format!("duplicate date {}", w[0].0),
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn write(path: &Path, body: &str) {
        let mut f = fs::File::create(path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
    }

    const HEADER: &str = "date,open,close,volume,shares_outstanding\n";

    #[test]
    fn log_price_values() {
        assert_eq!(log_price(1.0).unwrap(), 0.0);
        assert!((log_price(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        // ln(100) = 4.605170185988091368...
        assert!((log_price(100.0).unwrap() - 4.605_170_185_988_091).abs() < 1e-14);
        assert!(matches!(log_price(0.0), Err(Error::Domain(_))));
        assert!(matches!(log_price(-3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn intersection_of_aligned_files_has_no_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let rows = "2014-01-02,10,11,100,1000\n2014-01-03,11,12,100,1000\n2014-01-06,12,13,100,1000\n";
        write(&dir.path().join("AAA.csv"), &format!("{HEADER}{rows}"));
        write(&dir.path().join("BBB.csv"), &format!("{HEADER}{rows}"));
        let bench = dir.path().join("bench.csv");
        write(&bench, "date,close\n2014-01-02,100\n2014-01-03,101\n2014-01-06,102\n");
        let panel = load_panel(dir.path(), &bench, CalendarPolicy::Intersection).unwrap();
        assert_eq!(panel.symbol_count(), 2);
        assert_eq!(panel.calendar().len(), 3);
        assert_eq!(panel.missing_count(), 0);
    }

    #[test]
    fn union_marks_gap_as_missing() {
        let dir = tempfile::tempdir().unwrap();
        write(
            &dir.path().join("A.csv"),
            &format!("{HEADER}2014-01-02,10,11,100,1000\n2014-01-03,11,12,100,1000\n"),
        );
        write(
            &dir.path().join("B.csv"),
            &format!("{HEADER}2014-01-03,11,12,100,1000\n"),
        );
        let bench = dir.path().join("bench.csv");
        write(&bench, "date,close\n2014-01-02,100\n2014-01-03,101\n");
        let panel = load_panel(dir.path(), &bench, CalendarPolicy::Union).unwrap();
        let b = panel.symbol_id("B").unwrap();
        let i = panel.calendar().index_of(d("2014-01-02")).unwrap();
        assert!(!panel.series(b).is_present(i));
        assert_eq!(panel.missing_count(), 1);
    }

    #[test]
    fn malformed_row_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        write(
            &dir.path().join("A.csv"),
            &format!("{HEADER}2014-01-02,10,11,100,1000\n2014-01-03,abc,12,100,1000\n"),
        );
        let bench = dir.path().join("bench.csv");
        write(&bench, "date,close\n2014-01-02,100\n");
        let err = load_panel(dir.path(), &bench, CalendarPolicy::Union).unwrap_err();
        match err {
            Error::MalformedRow { file, line, .. } => {
                assert!(file.ends_with("A.csv"));
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_positive_rows_are_rejected_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        write(
            &dir.path().join("A.csv"),
            &format!("{HEADER}2014-01-02,10,11,100,1000\n2014-01-03,0,12,100,1000\n2014-01-06,10,11,100,0\n"),
        );
        let bench = dir.path().join("bench.csv");
        write(&bench, "date,close\n2014-01-02,100\n");
        let panel = load_panel(dir.path(), &bench, CalendarPolicy::Union).unwrap();
        assert_eq!(panel.calendar().len(), 1);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let bench = dir.path().join("bench.csv");
        write(&bench, "date,close\n2014-01-02,100\n");
        assert!(matches!(
            load_panel(dir.path(), &bench, CalendarPolicy::Union),
            Err(Error::EmptyUniverse(_))
        ));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("A.csv"), "date,close,open,volume,shares_outstanding\n");
        let bench = dir.path().join("bench.csv");
        write(&bench, "date,close\n2014-01-02,100\n");
        assert!(matches!(
            load_panel(dir.path(), &bench, CalendarPolicy::Union),
            Err(Error::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn calendar_rejects_duplicates_and_finds_period_starts() {
        assert!(TradingCalendar::new(vec![d("2014-01-02"), d("2014-01-02")]).is_err());
        // Mon 2014-01-06 is a holiday in this calendar.
        let cal = TradingCalendar::new(vec![
            d("2014-01-02"),
            d("2014-01-03"),
            d("2014-01-07"),
            d("2014-01-08"),
            d("2014-02-03"),
        ])
        .unwrap();
        assert_eq!(cal.first_trading_days(CalendarPeriod::Week), &[0, 2, 4]);
        assert_eq!(cal.first_trading_days(CalendarPeriod::Month), &[0, 4]);
        assert_eq!(cal.first_trading_days(CalendarPeriod::Year), &[0]);
    }

    #[test]
    fn membership_latest_action_wins() {
        let m = Membership::new(vec![
            (d("2014-01-01"), "A".into(), MembershipAction::Add),
            (d("2015-01-01"), "A".into(), MembershipAction::Drop),
        ]);
        assert!(!m.is_member("A", d("2013-12-31")));
        assert!(m.is_member("A", d("2014-06-01")));
        assert!(!m.is_member("A", d("2015-01-01")));
        assert!(!m.is_member("B", d("2014-06-01")));
    }
}
