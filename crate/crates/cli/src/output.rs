//! Output files, their `.meta` sidecars and plain-text tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use toml::{Table, Value};

use crate::config::meta_path;
use crate::error::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

/// Fails early if the directory of an output path is missing.
pub fn check_writable(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::Io(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

pub fn check_readable(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("input file {} does not exist", path.display())))
    }
}

/// Writes `path` through `fill`, then its sidecar.
pub fn write_with_meta<F>(path: &Path, meta: &Table, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
{
    let mut buf = Vec::new();
    fill(&mut buf)?;
    fs::write(path, &buf).map_err(|e| io_err(path, e))?;
    write_meta(path, meta)
}

pub fn write_meta(path: &Path, meta: &Table) -> Result<(), CliError> {
    let mp = meta_path(path);
    let text = toml::to_string(meta).map_err(|e| io_err(&mp, e))?;
    fs::write(&mp, text).map_err(|e| io_err(&mp, e))
}

/// Header of every sidecar.
pub fn meta_header(kind: &str, command: &str) -> Table {
    let mut t = Table::new();
    t.insert("kind".into(), Value::String(kind.into()));
    t.insert("command".into(), Value::String(command.into()));
    t.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    t
}

/// Four significant digits, switching to exponent notation for very large
/// or small magnitudes.
pub fn sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let e = v.abs().log10().floor() as i32;
    if !(-3..6).contains(&e) {
        return format!("{v:.3e}");
    }
    let decimals = (3 - e).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Left-aligned first column, right-aligned others.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i == 0 {
                s.push_str(&format!("{c:<w$}", w = widths[0]));
            } else {
                s.push_str(&format!("  {c:>w$}", w = widths[i]));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    let total: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

pub fn print(text: &str) {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    // a closed pipe is not an error worth reporting
    let _ = lock.write_all(text.as_bytes());
}
