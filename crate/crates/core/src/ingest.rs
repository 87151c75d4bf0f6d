//! Raw loss records to transformed events and a calendar-month panel.
//!
//! Each record carries a date and per-category amounts. The first two
//! categories become the two margins: an amount above the threshold becomes
//! `ln(amount)`, anything else 0, and records with nothing left are dropped.
//! The third category is read but not modelled.

use std::io::Read;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::simulate::{marginal_jump_vectors, EventRecord, IntervalPanel};

/// One row of a raw loss file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawLossRecord {
    pub date: NaiveDate,
    pub building: f64,
    pub contents: f64,
    pub profit: f64,
}

/// Whether amounts are still on their original scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Provenance {
    #[default]
    Raw,
    Transformed,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Raw => "raw",
            Provenance::Transformed => "transformed",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "raw" => Ok(Provenance::Raw),
            "transformed" => Ok(Provenance::Transformed),
            other => Err(Error::Parse(format!("unknown provenance '{other}'"))),
        }
    }
}

/// Header names accepted for each column (compared case-insensitively) and
/// the date formats tried in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMapping {
    pub date: Vec<String>,
    pub building: Vec<String>,
    pub contents: Vec<String>,
    /// The profit column may be absent.
    pub profit: Vec<String>,
    pub date_formats: Vec<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            date: v(&["date"]),
            building: v(&["building", "buildings"]),
            contents: v(&["contents", "content"]),
            profit: v(&["profit", "profits"]),
            date_formats: v(&["%Y-%m-%d", "%m/%d/%Y", "%d.%m.%Y", "%Y%m%d"]),
        }
    }
}

/// Records read from a file plus the rows that could not be parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLossData {
    pub records: Vec<RawLossRecord>,
    /// `(1-based data row, message)`.
    pub bad_rows: Vec<(usize, String)>,
    pub provenance: Provenance,
}

/// Fraction of unparseable rows that aborts a read.
pub const MAX_BAD_ROW_SHARE: f64 = 0.01;

fn find_column(headers: &csv::StringRecord, names: &[String]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| n.eq_ignore_ascii_case(h.trim())))
}

fn parse_date(s: &str, formats: &[String]) -> Option<NaiveDate> {
    formats.iter().find_map(|f| NaiveDate::parse_from_str(s.trim(), f).ok())
}

fn parse_amount(s: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("cannot parse {name} '{s}'"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{name} must be finite and >= 0, got {v}"))
    }
}

/// Reads a raw loss file. Rows that fail to parse are collected; more than
/// 1% of them aborts with an error listing the first few.
pub fn read_raw_losses<R: Read>(input: R, mapping: &ColumnMapping) -> Result<RawLossData> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |names: &[String], what: &str| {
        find_column(&headers, names).ok_or_else(|| {
            Error::Parse(format!(
                "no {what} column (accepted headers: {}) in '{}'",
                names.join(", "),
                headers.iter().collect::<Vec<_>>().join(",")
            ))
        })
    };
    let i_date = col(&mapping.date, "date")?;
    let i_building = col(&mapping.building, "building")?;
    let i_contents = col(&mapping.contents, "contents")?;
    let i_profit = find_column(&headers, &mapping.profit);

    let mut records = Vec::new();
    let mut bad_rows = Vec::new();
    let mut total = 0usize;
    for (k, rec) in r.records().enumerate() {
        total += 1;
        let row = k + 1;
        let parsed = rec.map_err(|e| e.to_string()).and_then(|rec| {
            let field = |i: usize| rec.get(i).ok_or_else(|| "missing field".to_string());
            let date = parse_date(field(i_date)?, &mapping.date_formats)
                .ok_or_else(|| format!("cannot parse date '{}'", field(i_date).unwrap_or("")))?;
            let building = parse_amount(field(i_building)?, "building")?;
            let contents = parse_amount(field(i_contents)?, "contents")?;
            let profit = match i_profit {
                Some(i) => parse_amount(field(i)?, "profit")?,
                None => 0.0,
            };
            Ok(RawLossRecord { date, building, contents, profit })
        });
        match parsed {
            Ok(r) => records.push(r),
            Err(msg) => bad_rows.push((row, msg)),
        }
    }
    if bad_rows.len() as f64 > MAX_BAD_ROW_SHARE * total as f64 {
        let listed: Vec<String> =
            bad_rows.iter().take(5).map(|(r, m)| format!("row {r}: {m}")).collect();
        return Err(Error::Input(format!(
            "{} of {total} rows are unreadable (limit 1%): {}",
            bad_rows.len(),
            listed.join("; ")
        )));
    }
    Ok(RawLossData { records, bad_rows, provenance: Provenance::Raw })
}

/// Inclusive date range made of whole calendar months.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationWindow {
    start: NaiveDate,
    end: NaiveDate,
}

fn last_day_of_month(d: NaiveDate) -> NaiveDate {
    let (y, m) = if d.month() == 12 { (d.year() + 1, 1) } else { (d.year(), d.month() + 1) };
    NaiveDate::from_ymd_opt(y, m, 1).expect("valid month start").pred_opt().expect("has predecessor")
}

impl ObservationWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Input(format!("window end {end} precedes start {start}")));
        }
        if start.day() != 1 || end != last_day_of_month(end) {
            return Err(Error::Input(format!(
                "window {start}..{end} is not a whole number of calendar months"
            )));
        }
        Ok(Self { start, end })
    }

    /// January of `first` through December of `last`.
    pub fn years(first: i32, last: i32) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(first, 1, 1)
            .ok_or_else(|| Error::Input(format!("invalid year {first}")))?;
        let end = NaiveDate::from_ymd_opt(last, 12, 31)
            .ok_or_else(|| Error::Input(format!("invalid year {last}")))?;
        Self::new(start, end)
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn months(&self) -> usize {
        ((self.end.year() - self.start.year()) * 12 + self.end.month() as i32
            - self.start.month() as i32
            + 1) as usize
    }

    /// Length in years, counting every month as 1/12.
    pub fn horizon_years(&self) -> f64 {
        self.months() as f64 / 12.0
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        d >= self.start && d <= self.end
    }

    /// 0-based month index of a date inside the window.
    pub fn month_index(&self, d: NaiveDate) -> usize {
        ((d.year() - self.start.year()) * 12 + d.month() as i32 - self.start.month() as i32) as usize
    }

    /// Event time in years: the end of the date's day, as a fraction of the
    /// window, times the horizon. Always in `(0, T]`.
    pub fn event_time(&self, d: NaiveDate) -> f64 {
        let day = (d - self.start).num_days() + 1;
        day as f64 / self.days() as f64 * self.horizon_years()
    }
}

/// Output of [`preprocess`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossEvents {
    pub window: ObservationWindow,
    pub events: Vec<EventRecord>,
    /// Date of each event, parallel to `events`.
    pub dates: Vec<NaiveDate>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub provenance: Provenance,
}

impl LossEvents {
    pub fn horizon(&self) -> f64 {
        self.window.horizon_years()
    }
}

/// Thresholds and log-transforms the first two categories.
pub fn preprocess(data: &RawLossData, window: ObservationWindow, threshold: f64) -> Result<LossEvents> {
    if data.provenance == Provenance::Transformed {
        return Err(Error::Input(
            "input is already thresholded and log-transformed; refusing to transform twice".into(),
        ));
    }
    if !(threshold.is_finite() && threshold >= 1.0) {
        // below 1 the log of a retained amount could be <= 0
        return Err(Error::InvalidParameter(format!("threshold must be >= 1, got {threshold}")));
    }
    let outside = data.records.iter().filter(|r| !window.contains(r.date)).count();
    if outside > 0 {
        return Err(Error::Input(format!(
            "{outside} record(s) fall outside the window {}..{}",
            window.start, window.end
        )));
    }
    let transform = |a: f64| if a > threshold { a.ln() } else { 0.0 };
    let mut order: Vec<&RawLossRecord> = data.records.iter().collect();
    order.sort_by_key(|r| r.date);
    let mut events = Vec::new();
    let mut dates = Vec::new();
    for r in order {
        let (a1, a2) = (transform(r.building), transform(r.contents));
        if a1 == 0.0 && a2 == 0.0 {
            continue;
        }
        events.push(EventRecord { time: window.event_time(r.date), amount1: a1, amount2: a2, origin: None });
        dates.push(r.date);
    }
    let (s1, s2) = marginal_jump_vectors(&events);
    Ok(LossEvents { window, events, dates, s1, s2, provenance: Provenance::Transformed })
}

/// Per-calendar-month maxima and counts. The panel's horizon is the window
/// length in years, so every month gets the same `dt = 1/12`.
pub fn build_monthly_panel(losses: &LossEvents) -> Result<IntervalPanel> {
    let months = losses.window.months();
    let mut z = vec![[0.0f64; 2]; months];
    let mut n = vec![[0u32; 2]; months];
    for (e, d) in losses.events.iter().zip(&losses.dates) {
        if !losses.window.contains(*d) {
            return Err(Error::Input(format!("event dated {d} lies outside the window")));
        }
        let i = losses.window.month_index(*d);
        for (j, a) in [e.amount1, e.amount2].into_iter().enumerate() {
            if a > 0.0 {
                n[i][j] += 1;
                z[i][j] = z[i][j].max(a);
            }
        }
    }
    IntervalPanel::new(losses.horizon(), z, n)
}
