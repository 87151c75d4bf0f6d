//! Delimited-text formats for panels, event lists and jump-size vectors.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces values bit for bit.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::simulate::{EventRecord, IntervalPanel, Origin};

const PANEL_HEADER: [&str; 5] = ["interval_index", "z1", "z2", "n1", "n2"];

fn parse_f64(field: &str, what: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {row}: cannot parse {what} '{field}'")))
}

fn parse_u32(field: &str, what: &str, row: usize) -> Result<u32> {
    field
        .trim()
        .parse::<u32>()
        .map_err(|_| Error::Parse(format!("row {row}: cannot parse {what} '{field}'")))
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found.len() < expected.len() || found[..expected.len()] != *expected {
        return Err(Error::Parse(format!(
            "expected header '{}', found '{}'",
            expected.join(","),
            found.join(",")
        )));
    }
    Ok(())
}

pub fn write_panel<W: Write>(panel: &IntervalPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PANEL_HEADER)?;
    for (i, (z, n)) in panel.maxima().iter().zip(panel.counts()).enumerate() {
        w.write_record([
            (i + 1).to_string(),
            z[0].to_string(),
            z[1].to_string(),
            n[0].to_string(),
            n[1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a panel; the horizon is not part of the file.
pub fn read_panel<R: Read>(input: R, horizon: f64) -> Result<IntervalPanel> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(r.headers()?, &PANEL_HEADER)?;
    let mut z = Vec::new();
    let mut n = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        if rec.len() != PANEL_HEADER.len() {
            return Err(Error::Parse(format!("row {row}: expected 5 fields, found {}", rec.len())));
        }
        let index = parse_u32(&rec[0], "interval_index", row)?;
        if index as usize != row {
            return Err(Error::Parse(format!("row {row}: interval_index {index} out of sequence")));
        }
        z.push([parse_f64(&rec[1], "z1", row)?, parse_f64(&rec[2], "z2", row)?]);
        n.push([parse_u32(&rec[3], "n1", row)?, parse_u32(&rec[4], "n2", row)?]);
    }
    IntervalPanel::new(horizon, z, n)
}

/// Writes `time,amount1,amount2`, plus `origin` when `keep_origins` is set.
pub fn write_events<W: Write>(events: &[EventRecord], out: W, keep_origins: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if keep_origins {
        w.write_record(["time", "amount1", "amount2", "origin"])?;
    } else {
        w.write_record(["time", "amount1", "amount2"])?;
    }
    for e in events {
        let mut rec = vec![e.time.to_string(), e.amount1.to_string(), e.amount2.to_string()];
        if keep_origins {
            rec.push(e.origin.map(Origin::as_str).unwrap_or("").to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an event list. An `origin` column, if present, is ignored: every
/// returned record has `origin: None`.
pub fn read_events<R: Read>(input: R) -> Result<Vec<EventRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    check_header(r.headers()?, &["time", "amount1", "amount2"])?;
    let mut events = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        if rec.len() < 3 {
            return Err(Error::Parse(format!("row {row}: expected at least 3 fields")));
        }
        let e = EventRecord {
            time: parse_f64(&rec[0], "time", row)?,
            amount1: parse_f64(&rec[1], "amount1", row)?,
            amount2: parse_f64(&rec[2], "amount2", row)?,
            origin: None,
        };
        if !(e.amount1 >= 0.0 && e.amount2 >= 0.0) {
            return Err(Error::Input(format!("row {row}: amounts must be >= 0")));
        }
        events.push(e);
    }
    Ok(events)
}

pub fn write_jumps<W: Write>(s: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["amount"])?;
    for x in s {
        w.write_record([x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jumps<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(r.headers()?, &["amount"])?;
    let mut s = Vec::new();
    for (k, rec) in r.records().enumerate() {
        s.push(parse_f64(&rec?[0], "amount", k + 1)?);
    }
    Ok(s)
}
