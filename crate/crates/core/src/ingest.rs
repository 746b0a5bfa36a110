//! Input tables: boards, prices, corporation metadata and trader activity.
//!
//! All four formats are UTF-8 CSV with a fixed header and `#` comment lines.
//! Each `parse_*` function is strict and stops at the first error; the
//! matching `scan_*` function keeps going and records every finding, which is
//! what `validate` reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOARDS_HEADER: [&str; 4] = ["year", "corp_id", "director_id", "is_financial_expert"];
pub const PRICES_HEADER: [&str; 3] = ["ticker", "date", "close"];
pub const META_HEADER: [&str; 5] = ["corp_id", "ticker", "sector", "latitude", "longitude"];
pub const TRADERS_HEADER: [&str; 4] = ["ticker", "year", "mentions", "volume"];

/// Default share of calendar days a series may miss before it is excluded.
pub const DEFAULT_MAX_MISSING_FRACTION: f64 = 0.05;

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

string_id!(
    /// Opaque corporation identifier.
    CorpId
);
string_id!(
    /// Opaque director identifier, already disambiguated upstream.
    DirectorId
);
string_id!(Ticker);

/// Market sector. The seven named sectors get their own panels; anything else
/// keeps its label (so `F` still distinguishes it) but is grouped as "other".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Sector {
    BasicMaterials,
    ConsumerGoods,
    Financial,
    Healthcare,
    Industrial,
    Services,
    Technology,
    Other(String),
}

impl Sector {
    pub const NAMED: [Sector; 7] = [
        Sector::BasicMaterials,
        Sector::ConsumerGoods,
        Sector::Financial,
        Sector::Healthcare,
        Sector::Industrial,
        Sector::Services,
        Sector::Technology,
    ];

    pub fn parse(raw: &str) -> Sector {
        let norm: String = raw
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        match norm.as_str() {
            "basic_materials" => Sector::BasicMaterials,
            "consumer_goods" => Sector::ConsumerGoods,
            "financial" => Sector::Financial,
            "healthcare" | "health_care" => Sector::Healthcare,
            "industrial" | "industrial_goods" => Sector::Industrial,
            "services" => Sector::Services,
            "technology" => Sector::Technology,
            _ => Sector::Other(norm),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Sector::BasicMaterials => "basic_materials",
            Sector::ConsumerGoods => "consumer_goods",
            Sector::Financial => "financial",
            Sector::Healthcare => "healthcare",
            Sector::Industrial => "industrial",
            Sector::Services => "services",
            Sector::Technology => "technology",
            Sector::Other(s) => s,
        }
    }

    pub fn is_named(&self) -> bool {
        !matches!(self, Sector::Other(_))
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<Sector> for String {
    fn from(s: Sector) -> String {
        s.as_str().to_string()
    }
}

impl From<String> for Sector {
    fn from(s: String) -> Sector {
        Sector::parse(&s)
    }
}

/// One corporation's board in one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardRecord {
    pub year: i32,
    pub corporation: CorpId,
    /// Sorted, no duplicates.
    pub directors: Vec<DirectorId>,
    /// Parallel to `directors`.
    pub expert_flags: Vec<bool>,
}

impl BoardRecord {
    pub fn size(&self) -> usize {
        self.directors.len()
    }

    pub fn expert_fraction(&self) -> f64 {
        if self.directors.is_empty() {
            return 0.0;
        }
        self.expert_flags.iter().filter(|&&e| e).count() as f64 / self.directors.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::InvalidInput(format!(
                "coordinates out of range: ({latitude}, {longitude})"
            )));
        }
        Ok(GeoPoint {
            latitude,
            longitude,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorporationMeta {
    pub corporation: CorpId,
    pub ticker: Ticker,
    pub sector: Sector,
    pub location: Option<GeoPoint>,
}

/// Daily closes for one ticker within one calendar year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: Ticker,
    pub year: i32,
    /// Strictly increasing dates, positive closes.
    pub observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn closes(&self) -> Vec<f64> {
        self.observations.iter().map(|&(_, p)| p).collect()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.observations.iter().map(|&(d, _)| d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderActivity {
    pub ticker: Ticker,
    pub year: i32,
    pub mentions: u64,
    pub volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub source: String,
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.line {
            Some(l) => write!(f, "{sev}: {}:{l}: {}", self.source, self.message),
            None => write!(f, "{sev}: {}: {}", self.source, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub issues: Vec<Issue>,
}

impl Diagnostics {
    pub fn error(&mut self, source: &str, line: Option<u64>, message: impl Into<String>) {
        self.push(Severity::Error, source, line, message.into());
    }

    pub fn warn(&mut self, source: &str, line: Option<u64>, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{source}: {message}");
        self.push(Severity::Warning, source, line, message);
    }

    fn push(&mut self, severity: Severity, source: &str, line: Option<u64>, message: String) {
        self.issues.push(Issue {
            severity,
            source: source.to_string(),
            line,
            message,
        });
    }

    pub fn error_count(&self) -> usize {
        self.issues.iter().filter(|i| i.severity == Severity::Error).count()
    }

    pub fn warning_count(&self) -> usize {
        self.issues.len() - self.error_count()
    }

    pub fn first_error(&self) -> Option<Error> {
        self.issues
            .iter()
            .find(|i| i.severity == Severity::Error)
            .map(|i| Error::Parse {
                source_name: i.source.clone(),
                line: i.line.unwrap_or(0),
                message: i.message.clone(),
            })
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.issues.extend(other.issues);
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source)
}

/// Iterate data rows, checking the header and field count. Rows that fail the
/// shape check are reported and skipped.
fn rows<R: Read>(
    source: R,
    name: &str,
    header: &[&str],
    diag: &mut Diagnostics,
) -> Vec<(u64, csv::StringRecord)> {
    let mut rdr = reader(source);
    match rdr.headers() {
        Ok(h) => {
            // An empty input has an empty header and no rows.
            if h.is_empty() {
                return Vec::new();
            }
            let got: Vec<&str> = h.iter().collect();
            if got != header {
                diag.error(
                    name,
                    Some(1),
                    format!("expected header `{}`, found `{}`", header.join(","), got.join(",")),
                );
                return Vec::new();
            }
        }
        Err(e) => {
            diag.error(name, Some(1), e.to_string());
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        match rec {
            Ok(r) => {
                let line = r.position().map(|p| p.line()).unwrap_or(0);
                if r.len() != header.len() {
                    diag.error(
                        name,
                        Some(line),
                        format!("expected {} fields, found {}", header.len(), r.len()),
                    );
                    continue;
                }
                out.push((line, r));
            }
            Err(e) => {
                let line = e.position().map(|p| p.line());
                diag.error(name, line, e.to_string());
            }
        }
    }
    out
}

fn strict<T>(value: T, diag: Diagnostics) -> Result<T> {
    match diag.first_error() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Parse `boards.csv`, stopping at the first error.
pub fn parse_boards<R: Read>(source: R) -> Result<Vec<BoardRecord>> {
    let mut diag = Diagnostics::default();
    let recs = scan_boards(source, "boards.csv", &mut diag);
    strict(recs, diag)
}

/// Parse `boards.csv`, recording every finding. Records are grouped per
/// (year, corporation) and a director flagged as a financial expert on any
/// board in a year is flagged on all of that year's boards.
pub fn scan_boards<R: Read>(source: R, name: &str, diag: &mut Diagnostics) -> Vec<BoardRecord> {
    let mut grouped: BTreeMap<(i32, CorpId), BTreeMap<DirectorId, bool>> = BTreeMap::new();
    for (line, r) in rows(source, name, &BOARDS_HEADER, diag) {
        let year = match r[0].parse::<i32>() {
            Ok(y) => y,
            Err(_) => {
                diag.error(name, Some(line), format!("invalid year `{}`", &r[0]));
                continue;
            }
        };
        if r[1].is_empty() || r[2].is_empty() {
            diag.error(name, Some(line), "empty corp_id or director_id");
            continue;
        }
        let expert = match &r[3] {
            "0" => false,
            "1" => true,
            other => {
                diag.error(name, Some(line), format!("is_financial_expert must be 0 or 1, found `{other}`"));
                continue;
            }
        };
        let board = grouped.entry((year, CorpId::from(&r[1]))).or_default();
        if board.insert(DirectorId::from(&r[2]), expert).is_some() {
            diag.error(
                name,
                Some(line),
                format!("duplicate director {} for {} in {year}", &r[2], &r[1]),
            );
        }
    }

    let mut experts: BTreeSet<(i32, &DirectorId)> = BTreeSet::new();
    for ((year, _), board) in &grouped {
        for (d, &e) in board {
            if e {
                experts.insert((*year, d));
            }
        }
    }
    grouped
        .iter()
        .map(|((year, corp), board)| BoardRecord {
            year: *year,
            corporation: corp.clone(),
            directors: board.keys().cloned().collect(),
            expert_flags: board.keys().map(|d| experts.contains(&(*year, d))).collect(),
        })
        .collect()
}

pub fn parse_prices<R: Read>(source: R) -> Result<Vec<PriceSeries>> {
    let mut diag = Diagnostics::default();
    let series = scan_prices(source, "prices.csv", &mut diag);
    strict(series, diag)
}

/// Parse `prices.csv` into per-ticker-year series. A repeated (ticker, date)
/// keeps the later row and emits a warning.
pub fn scan_prices<R: Read>(source: R, name: &str, diag: &mut Diagnostics) -> Vec<PriceSeries> {
    let mut grouped: BTreeMap<(Ticker, i32), BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for (line, r) in rows(source, name, &PRICES_HEADER, diag) {
        let ticker = &r[0];
        if ticker.is_empty() {
            diag.error(name, Some(line), "empty ticker");
            continue;
        }
        let date = match NaiveDate::parse_from_str(&r[1], "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                diag.error(name, Some(line), format!("{ticker}: unparseable date `{}`", &r[1]));
                continue;
            }
        };
        let close = match r[2].parse::<f64>() {
            Ok(p) if p.is_finite() && p > 0.0 => p,
            Ok(p) => {
                diag.error(name, Some(line), format!("{ticker} {date}: non-positive close {p}"));
                continue;
            }
            Err(_) => {
                diag.error(name, Some(line), format!("{ticker} {date}: unparseable close `{}`", &r[2]));
                continue;
            }
        };
        let series = grouped.entry((Ticker::from(ticker), date.year())).or_default();
        if series.insert(date, close).is_some() {
            diag.warn(name, Some(line), format!("{ticker} {date}: duplicate row, keeping the later close"));
        }
    }
    grouped
        .into_iter()
        .map(|((ticker, year), obs)| PriceSeries {
            ticker,
            year,
            observations: obs.into_iter().collect(),
        })
        .collect()
}

pub fn parse_meta<R: Read>(source: R) -> Result<Vec<CorporationMeta>> {
    let mut diag = Diagnostics::default();
    let meta = scan_meta(source, "meta.csv", &mut diag);
    strict(meta, diag)
}

pub fn scan_meta<R: Read>(source: R, name: &str, diag: &mut Diagnostics) -> Vec<CorporationMeta> {
    let mut by_corp: BTreeMap<CorpId, CorporationMeta> = BTreeMap::new();
    let mut tickers: BTreeMap<Ticker, CorpId> = BTreeMap::new();
    for (line, r) in rows(source, name, &META_HEADER, diag) {
        if r[0].is_empty() || r[1].is_empty() {
            diag.error(name, Some(line), "empty corp_id or ticker");
            continue;
        }
        let corp = CorpId::from(&r[0]);
        let ticker = Ticker::from(&r[1]);
        let location = match (r[3].is_empty(), r[4].is_empty()) {
            (true, true) => None,
            (false, false) => {
                let parsed = r[3]
                    .parse::<f64>()
                    .ok()
                    .zip(r[4].parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidInput("unparseable coordinates".into()))
                    .and_then(|(lat, lon)| GeoPoint::new(lat, lon));
                match parsed {
                    Ok(p) => Some(p),
                    Err(e) => {
                        diag.error(name, Some(line), format!("{corp}: {e}"));
                        continue;
                    }
                }
            }
            _ => {
                diag.error(name, Some(line), format!("{corp}: latitude and longitude must both be present or both empty"));
                continue;
            }
        };
        if by_corp.contains_key(&corp) {
            diag.error(name, Some(line), format!("duplicate corp_id {corp}"));
            continue;
        }
        if let Some(other) = tickers.get(&ticker) {
            diag.error(name, Some(line), format!("ticker {ticker} already used by {other}"));
            continue;
        }
        tickers.insert(ticker.clone(), corp.clone());
        by_corp.insert(
            corp.clone(),
            CorporationMeta {
                corporation: corp,
                ticker,
                sector: Sector::parse(&r[2]),
                location,
            },
        );
    }
    by_corp.into_values().collect()
}

pub fn parse_traders<R: Read>(source: R) -> Result<Vec<TraderActivity>> {
    let mut diag = Diagnostics::default();
    let t = scan_traders(source, "traders.csv", &mut diag);
    strict(t, diag)
}

pub fn scan_traders<R: Read>(source: R, name: &str, diag: &mut Diagnostics) -> Vec<TraderActivity> {
    let mut by_key: BTreeMap<(Ticker, i32), TraderActivity> = BTreeMap::new();
    for (line, r) in rows(source, name, &TRADERS_HEADER, diag) {
        let Ok(year) = r[1].parse::<i32>() else {
            diag.error(name, Some(line), format!("invalid year `{}`", &r[1]));
            continue;
        };
        let Ok(mentions) = r[2].parse::<u64>() else {
            diag.error(name, Some(line), format!("mentions must be a non-negative integer, found `{}`", &r[2]));
            continue;
        };
        let volume = match r[3].parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => v,
            _ => {
                diag.error(name, Some(line), format!("volume must be a non-negative number, found `{}`", &r[3]));
                continue;
            }
        };
        let ticker = Ticker::from(&r[0]);
        if by_key.contains_key(&(ticker.clone(), year)) {
            diag.error(name, Some(line), format!("duplicate row for {ticker} in {year}"));
            continue;
        }
        by_key.insert(
            (ticker.clone(), year),
            TraderActivity {
                ticker,
                year,
                mentions,
                volume,
            },
        );
    }
    by_key.into_values().collect()
}

fn io_err(e: std::io::Error) -> Error {
    Error::Csv(e.into())
}

pub fn write_boards<W: Write>(out: W, boards: &[BoardRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOARDS_HEADER)?;
    let mut sorted: Vec<&BoardRecord> = boards.iter().collect();
    sorted.sort_by(|a, b| (a.year, &a.corporation).cmp(&(b.year, &b.corporation)));
    for b in sorted {
        for (d, &e) in b.directors.iter().zip(&b.expert_flags) {
            w.write_record([
                b.year.to_string().as_str(),
                b.corporation.as_str(),
                d.as_str(),
                if e { "1" } else { "0" },
            ])?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn write_prices<W: Write>(out: W, series: &[PriceSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PRICES_HEADER)?;
    for s in series {
        for (d, p) in &s.observations {
            w.write_record([s.ticker.as_str(), &d.format("%Y-%m-%d").to_string(), &p.to_string()])?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn write_meta<W: Write>(out: W, meta: &[CorporationMeta]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(META_HEADER)?;
    for m in meta {
        let (lat, lon) = match m.location {
            Some(p) => (p.latitude.to_string(), p.longitude.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([m.corporation.as_str(), m.ticker.as_str(), m.sector.as_str(), &lat, &lon])?;
    }
    w.flush().map_err(io_err)
}

pub fn write_traders<W: Write>(out: W, rows: &[TraderActivity]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADERS_HEADER)?;
    for t in rows {
        w.write_record([
            t.ticker.as_str(),
            &t.year.to_string(),
            &t.mentions.to_string(),
            &t.volume.to_string(),
        ])?;
    }
    w.flush().map_err(io_err)
}

/// Union of every date observed across the given series.
pub fn trading_calendar<'a, I>(series: I) -> Vec<NaiveDate>
where
    I: IntoIterator<Item = &'a PriceSeries>,
{
    let days: BTreeSet<NaiveDate> = series.into_iter().flat_map(|s| s.dates()).collect();
    days.into_iter().collect()
}

/// Outcome of aligning a series to the year's trading calendar.
#[derive(Debug, Clone, PartialEq)]
pub enum Completeness {
    /// Aligned to every calendar day; `carried` days reuse an earlier close.
    Kept { series: PriceSeries, carried: usize },
    Excluded { missing: usize, calendar_days: usize },
}

/// Align `series` to `calendar`. A series missing more than
/// `max_missing_fraction` of the calendar is excluded; remaining gaps carry the
/// previous close forward (leading gaps take the first observed close), so a
/// filled day has a zero log return.
pub fn apply_completeness_filter(
    series: &PriceSeries,
    calendar: &[NaiveDate],
    max_missing_fraction: f64,
) -> Completeness {
    let observed: BTreeMap<NaiveDate, f64> = series.observations.iter().copied().collect();
    let present = calendar.iter().filter(|d| observed.contains_key(d)).count();
    let missing = calendar.len() - present;
    if present == 0 || missing as f64 > max_missing_fraction * calendar.len() as f64 {
        return Completeness::Excluded {
            missing,
            calendar_days: calendar.len(),
        };
    }
    let first_close = calendar
        .iter()
        .find_map(|d| observed.get(d).copied())
        .expect("at least one day present");
    let mut last = first_close;
    let mut carried = 0;
    let observations = calendar
        .iter()
        .map(|d| match observed.get(d) {
            Some(&p) => {
                last = p;
                (*d, p)
            }
            None => {
                carried += 1;
                (*d, last)
            }
        })
        .collect();
    Completeness::Kept {
        series: PriceSeries {
            ticker: series.ticker.clone(),
            year: series.year,
            observations,
        },
        carried,
    }
}

/// Every table of a multi-year input bundle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub boards: Vec<BoardRecord>,
    pub meta: Vec<CorporationMeta>,
    pub prices: Vec<PriceSeries>,
    pub traders: Option<Vec<TraderActivity>>,
}

/// The tables for one calendar year, keyed consistently.
#[derive(Debug, Clone, PartialEq)]
pub struct YearDataset {
    pub year: i32,
    /// Sorted by corporation; every entry has metadata.
    pub boards: Vec<BoardRecord>,
    pub meta: BTreeMap<CorpId, CorporationMeta>,
    pub prices: BTreeMap<Ticker, PriceSeries>,
    pub traders: Option<BTreeMap<Ticker, TraderActivity>>,
    /// Boards dropped while assembling the year (missing metadata).
    pub dropped: Vec<(CorpId, String)>,
}

impl Dataset {
    /// Years that have at least one board record, ascending.
    pub fn years(&self) -> Vec<i32> {
        let ys: BTreeSet<i32> = self.boards.iter().map(|b| b.year).collect();
        ys.into_iter().collect()
    }

    pub fn year(&self, year: i32) -> YearDataset {
        let meta: BTreeMap<CorpId, CorporationMeta> = self
            .meta
            .iter()
            .map(|m| (m.corporation.clone(), m.clone()))
            .collect();
        let mut boards = Vec::new();
        let mut dropped = Vec::new();
        for b in self.boards.iter().filter(|b| b.year == year) {
            if meta.contains_key(&b.corporation) {
                boards.push(b.clone());
            } else {
                log::warn!("{year}: board of {} has no metadata row, dropped", b.corporation);
                dropped.push((b.corporation.clone(), "no metadata".to_string()));
            }
        }
        boards.sort_by(|a, b| a.corporation.cmp(&b.corporation));
        let prices = self
            .prices
            .iter()
            .filter(|s| s.year == year)
            .map(|s| (s.ticker.clone(), s.clone()))
            .collect();
        let traders = self.traders.as_ref().map(|rows| {
            rows.iter()
                .filter(|t| t.year == year)
                .map(|t| (t.ticker.clone(), t.clone()))
                .collect()
        });
        YearDataset {
            year,
            boards,
            meta,
            prices,
            traders,
            dropped,
        }
    }
}

impl YearDataset {
    pub fn meta_of(&self, corp: &CorpId) -> Option<&CorporationMeta> {
        self.meta.get(corp)
    }

    pub fn prices_of(&self, corp: &CorpId) -> Option<&PriceSeries> {
        self.meta.get(corp).and_then(|m| self.prices.get(&m.ticker))
    }

    /// Keep only the named corporations' boards.
    pub fn restrict(&self, keep: &BTreeSet<CorpId>) -> YearDataset {
        let mut out = self.clone();
        out.boards.retain(|b| keep.contains(&b.corporation));
        out
    }
}

/// Cross-table checks that need every file at once.
pub fn cross_check(dataset: &Dataset, diag: &mut Diagnostics) {
    let known_corps: BTreeSet<&CorpId> = dataset.meta.iter().map(|m| &m.corporation).collect();
    let known_tickers: BTreeSet<&Ticker> = dataset.meta.iter().map(|m| &m.ticker).collect();
    let mut reported = BTreeSet::new();
    for b in &dataset.boards {
        if !known_corps.contains(&b.corporation) && reported.insert(b.corporation.clone()) {
            diag.warn("boards.csv", None, format!("corporation {} has no row in meta.csv", b.corporation));
        }
    }
    let mut reported = BTreeSet::new();
    for s in &dataset.prices {
        if !known_tickers.contains(&s.ticker) && reported.insert(s.ticker.clone()) {
            diag.warn("prices.csv", None, format!("orphan ticker {} has no row in meta.csv", s.ticker));
        }
    }
    if let Some(traders) = &dataset.traders {
        let mut reported = BTreeSet::new();
        for t in traders {
            if !known_tickers.contains(&t.ticker) && reported.insert(t.ticker.clone()) {
                diag.warn("traders.csv", None, format!("orphan ticker {} has no row in meta.csv", t.ticker));
            }
        }
    }
    for m in &dataset.meta {
        if m.location.is_none() {
            diag.warn("meta.csv", None, format!("{} has no coordinates; the geographic control will be unavailable", m.corporation));
        }
    }
    let tickers_by_year: BTreeMap<i32, BTreeSet<&Ticker>> =
        dataset.prices.iter().fold(BTreeMap::new(), |mut acc, s| {
            acc.entry(s.year).or_default().insert(&s.ticker);
            acc
        });
    let meta: BTreeMap<&CorpId, &CorporationMeta> =
        dataset.meta.iter().map(|m| (&m.corporation, m)).collect();
    for b in &dataset.boards {
        if let Some(m) = meta.get(&b.corporation) {
            let has = tickers_by_year
                .get(&b.year)
                .is_some_and(|ts| ts.contains(&m.ticker));
            if !has {
                diag.warn(
                    "prices.csv",
                    None,
                    format!("{} ({}) has a board in {} but no prices that year", b.corporation, m.ticker, b.year),
                );
            }
        }
    }
}
