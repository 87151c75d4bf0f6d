//! One function per subcommand. Each validates its inputs, calls the
//! library, and writes machine-readable files plus a text table on stdout.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use bcpp::estimate::parameter_names;
use bcpp::ingest::{build_monthly_panel, preprocess, read_raw_losses, ColumnMapping, ObservationWindow, Provenance};
use bcpp::io::{read_events, read_jumps, read_panel, write_events, write_jumps, write_panel};
use bcpp::{
    aggregate, bootstrap, fit, gof_tests, gof_transform, marginal_jump_vectors, sample_path,
    BcppModel, BootstrapConfig, BootstrapSummary, CopulaFamily, DistFamily, FitReport,
    IntervalPanel, Method, OptimizerOptions,
};
use toml::{Table, Value};

use crate::config::{model_table, read_meta, resolve_model, Settings};
use crate::error::CliError;
use crate::output::{check_readable, check_writable, meta_header, print, render_table, sig4, write_meta, write_with_meta};
use crate::{BootstrapArgs, FitArgs, GofArgs, IngestArgs, ReportArgs, SimulateArgs};

const DEFAULT_HORIZON: f64 = 1.0;
const DEFAULT_INTERVALS: usize = 100;
const DEFAULT_REPLICATES: usize = 100;
const DEFAULT_SEED: u64 = 1;

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(validation(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(validation(format!("{name} must be >= {min}, got {v}")))
    }
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))
}

fn optimizer_options(s: &Settings) -> Result<OptimizerOptions, CliError> {
    let d = OptimizerOptions::default();
    let o = OptimizerOptions {
        xtol: s.f64("xtol")?.unwrap_or(d.xtol),
        ftol: s.f64("ftol")?.unwrap_or(d.ftol),
        max_iter: s.usize("max_iter")?.unwrap_or(d.max_iter),
        grid_points: s.usize("grid_points")?.unwrap_or(d.grid_points),
        delta_init: s.f64("delta_init")?.unwrap_or(d.delta_init),
        simplex_spread: s.f64("simplex_spread")?.unwrap_or(d.simplex_spread),
        ..d
    };
    o.validate()?;
    Ok(o)
}

fn optimizer_meta(o: &OptimizerOptions, t: &mut Table) {
    t.insert("xtol".into(), Value::Float(o.xtol));
    t.insert("ftol".into(), Value::Float(o.ftol));
    t.insert("max_iter".into(), Value::Integer(o.max_iter as i64));
    t.insert("grid_points".into(), Value::Integer(o.grid_points as i64));
    t.insert("delta_init".into(), Value::Float(o.delta_init));
    t.insert("simplex_spread".into(), Value::Float(o.simplex_spread));
}

fn method(flag: Option<&str>, s: &Settings) -> Result<Method, CliError> {
    match flag.map(str::to_string).or(s.str("method")?) {
        Some(m) => Ok(m.parse()?),
        None => Ok(Method::Ifm),
    }
}

fn seed_value(seed: u64) -> Value {
    // TOML integers are signed; seeds above i64::MAX are stored as strings
    i64::try_from(seed).map(Value::Integer).unwrap_or_else(|_| Value::String(seed.to_string()))
}

/// Horizon of a panel: flag, then the panel's sidecar, then config, then 1.
fn panel_horizon(flag: Option<f64>, panel: &Path, s: &Settings) -> Result<f64, CliError> {
    if let Some(h) = flag {
        return positive("horizon", h);
    }
    if let Some(meta) = read_meta(panel)? {
        if let Some(h) = meta.f64("horizon")? {
            return positive("horizon", h);
        }
    }
    positive("horizon", s.f64("horizon")?.unwrap_or(DEFAULT_HORIZON))
}

fn load_panel(path: &Path, horizon: f64) -> Result<IntervalPanel, CliError> {
    Ok(read_panel(open(path)?, horizon)?)
}

// ---------------------------------------------------------------- simulate

pub fn simulate(a: &SimulateArgs, s: &Settings) -> Result<(), CliError> {
    let model = resolve_model(a.model.as_deref(), s)?;
    let horizon = positive("horizon", a.horizon.or(s.f64("horizon")?).unwrap_or(DEFAULT_HORIZON))?;
    let intervals = at_least("intervals", a.intervals.or(s.usize("intervals")?).unwrap_or(DEFAULT_INTERVALS), 1)?;
    let seed = a.seed.or(s.u64("seed")?).unwrap_or(DEFAULT_SEED);
    let keep = a.keep_origins || s.bool("keep_origins")?.unwrap_or(false);
    let out_panel = a.out_panel.clone().or(s.path("out_panel")?);
    let out_events = a.out_events.clone().or(s.path("out_events")?);
    if out_panel.is_none() && out_events.is_none() {
        return Err(validation("simulate needs --out-panel and/or --out-events"));
    }
    for p in out_panel.iter().chain(&out_events) {
        check_writable(p)?;
    }

    let path = sample_path(&model, horizon, seed)?;
    let mut run = Table::new();
    run.insert("horizon".into(), Value::Float(horizon));
    run.insert("intervals".into(), Value::Integer(intervals as i64));
    run.insert("seed".into(), seed_value(seed));
    run.insert("keep_origins".into(), Value::Boolean(keep));
    if let Some(p) = &out_panel {
        run.insert("out_panel".into(), path_value(p));
    }
    if let Some(p) = &out_events {
        run.insert("out_events".into(), path_value(p));
    }
    run.extend(model_table(&model));

    if let Some(p) = &out_events {
        let mut meta = meta_header("events", "simulate");
        meta.extend(run.clone());
        write_with_meta(p, &meta, |buf| Ok(write_events(&path, buf, keep)?))?;
    }
    let (s1, s2) = marginal_jump_vectors(&path);
    let mut summary = format!(
        "simulated {} events on [0, {horizon}]: {} jumps in margin 1, {} in margin 2\n",
        path.len(),
        s1.len(),
        s2.len()
    );
    if let Some(p) = &out_panel {
        let panel = aggregate(&path, horizon, intervals)?;
        let mut meta = meta_header("panel", "simulate");
        meta.extend(run);
        write_with_meta(p, &meta, |buf| Ok(write_panel(&panel, buf)?))?;
        summary.push_str(&format!("panel: {} intervals of length {}\n", panel.intervals(), panel.dt()));
    }
    print(&summary);
    Ok(())
}

// --------------------------------------------------------------------- fit

fn family<T: std::str::FromStr<Err = bcpp::Error>>(
    flag: Option<&str>,
    s: &Settings,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    match flag.map(str::to_string).or(s.str(key)?) {
        Some(v) => Ok(v.parse()?),
        None => Ok(default),
    }
}

fn fit_table(r: &FitReport) -> Table {
    let mut t = Table::new();
    t.insert("method".into(), Value::String(r.method.to_string()));
    t.extend(model_table(&r.model));
    t.insert("loglik".into(), Value::Float(r.loglik));
    t.insert("converged".into(), Value::Boolean(r.converged));
    t.insert("iterations".into(), Value::Integer(r.iterations as i64));
    t
}

fn fit_text(names: &[String], values: &[f64], loglik: f64, converged: bool, method: &str) -> String {
    let mut header = vec![String::new()];
    header.extend(names.iter().cloned());
    let mut row = vec!["estimate".to_string()];
    row.extend(values.iter().map(|v| sig4(*v)));
    format!(
        "{}log-likelihood {}  method {method}  converged {converged}\n",
        render_table(&header, &[row]),
        sig4(loglik)
    )
}

pub fn fit_cmd(a: &FitArgs, s: &Settings) -> Result<(), CliError> {
    let panel_path = a.panel.clone().or(s.path("panel")?).ok_or_else(|| validation("fit needs --panel"))?;
    check_readable(&panel_path)?;
    let events = a.events.clone().or(s.path("events")?);
    let jumps = (a.jumps1.clone().or(s.path("jumps1")?), a.jumps2.clone().or(s.path("jumps2")?));
    let copula: CopulaFamily = family(a.copula.as_deref(), s, "copula", CopulaFamily::Clayton)?;
    let margins: [DistFamily; 2] = [
        family(a.margin1.as_deref(), s, "margin1", DistFamily::Exponential)?,
        family(a.margin2.as_deref(), s, "margin2", DistFamily::Exponential)?,
    ];
    let method = method(a.method.as_deref(), s)?;
    let options = optimizer_options(s)?;
    let out = a.out.clone().or(s.path("out")?);
    if let Some(p) = &out {
        check_writable(p)?;
    }
    let horizon = panel_horizon(a.horizon, &panel_path, s)?;

    let (s1, s2) = match (&events, &jumps) {
        (Some(e), _) => {
            check_readable(e)?;
            marginal_jump_vectors(&read_events(open(e)?)?)
        }
        (None, (Some(j1), Some(j2))) => {
            check_readable(j1)?;
            check_readable(j2)?;
            (read_jumps(open(j1)?)?, read_jumps(open(j2)?)?)
        }
        _ => return Err(validation("fit needs jump sizes: --events, or both --jumps1 and --jumps2")),
    };
    let panel = load_panel(&panel_path, horizon)?;
    let totals = panel.total_counts();
    if totals[0] != s1.len() as u64 || totals[1] != s2.len() as u64 {
        return Err(validation(format!(
            "panel counts ({}, {}) do not match the number of jump sizes ({}, {})",
            totals[0],
            totals[1],
            s1.len(),
            s2.len()
        )));
    }

    let report = fit(&panel, &s1, &s2, margins, copula, method, &options)?;
    let est = report.estimates();
    let names: Vec<String> = est.iter().map(|(n, _)| n.clone()).collect();
    let values: Vec<f64> = est.iter().map(|(_, v)| *v).collect();
    print(&fit_text(&names, &values, report.loglik, report.converged, &method.to_string()));

    if let Some(p) = &out {
        let body = toml::to_string(&fit_table(&report)).map_err(|e| CliError::Io(e.to_string()))?;
        let mut meta = meta_header("fit", "fit");
        meta.insert("panel".into(), path_value(&panel_path));
        if let Some(e) = &events {
            meta.insert("events".into(), path_value(e));
        } else if let (Some(j1), Some(j2)) = &jumps {
            meta.insert("jumps1".into(), path_value(j1));
            meta.insert("jumps2".into(), path_value(j2));
        }
        meta.insert("horizon".into(), Value::Float(horizon));
        meta.insert("method".into(), Value::String(method.to_string()));
        meta.insert("copula".into(), Value::String(copula.to_string()));
        meta.insert("margin1".into(), Value::String(margins[0].to_string()));
        meta.insert("margin2".into(), Value::String(margins[1].to_string()));
        meta.insert("out".into(), path_value(p));
        optimizer_meta(&options, &mut meta);
        write_with_meta(p, &meta, |buf| {
            buf.extend_from_slice(body.as_bytes());
            Ok(())
        })?;
    }
    if !report.converged {
        return Err(CliError::Numeric(format!(
            "optimizer did not converge within {} iterations; estimates above are the last iterate",
            report.iterations
        )));
    }
    Ok(())
}

// --------------------------------------------------------------- bootstrap

const BOOTSTRAP_ROWS: [&str; 3] = ["value", "bootstrap mean", "bootstrap standard deviation"];

fn bootstrap_csv(s: &BootstrapSummary) -> String {
    let mut out = format!("row,{}\n", s.names.join(","));
    for (label, row) in BOOTSTRAP_ROWS.iter().zip([&s.truth, &s.mean, &s.sd]) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{label},{}\n", cells.join(",")));
    }
    out
}

fn replicates_csv(s: &BootstrapSummary) -> String {
    let mut out = format!("replicate,seed,status,{}\n", s.names.join(","));
    let mut ok = s.estimates.iter();
    for (i, seed) in s.seeds.iter().enumerate() {
        match s.failures.iter().find(|(j, _)| *j == i) {
            Some((_, msg)) => {
                let blanks = ",".repeat(s.names.len());
                out.push_str(&format!("{i},{seed},\"failed: {}\"{blanks}\n", msg.replace('"', "'")));
            }
            None => {
                let cells: Vec<String> = ok.next().expect("one estimate per success").iter().map(|v| v.to_string()).collect();
                out.push_str(&format!("{i},{seed},ok,{}\n", cells.join(",")));
            }
        }
    }
    out
}

pub fn bootstrap_cmd(a: &BootstrapArgs, s: &Settings, jobs: Option<usize>) -> Result<(), CliError> {
    let model = resolve_model(a.model.as_deref(), s)?;
    let cfg = BootstrapConfig {
        horizon: positive("horizon", a.horizon.or(s.f64("horizon")?).unwrap_or(DEFAULT_HORIZON))?,
        intervals: at_least("intervals", a.intervals.or(s.usize("intervals")?).unwrap_or(DEFAULT_INTERVALS), 1)?,
        replicates: at_least("replicates", a.replicates.or(s.usize("replicates")?).unwrap_or(DEFAULT_REPLICATES), 2)?,
        method: method(a.method.as_deref(), s)?,
        master_seed: a.seed.or(s.u64("seed")?).unwrap_or(DEFAULT_SEED),
        options: optimizer_options(s)?,
        jobs,
    };
    let out = a.out.clone().or(s.path("out")?);
    let out_reps = a.out_replicates.clone().or(s.path("out_replicates")?);
    for p in out.iter().chain(&out_reps) {
        check_writable(p)?;
    }

    let summary = bootstrap(&model, &cfg)?;

    let mut header = vec![String::new()];
    header.extend(summary.names.iter().cloned());
    let rows: Vec<Vec<String>> = BOOTSTRAP_ROWS
        .iter()
        .zip([&summary.truth, &summary.mean, &summary.sd])
        .map(|(label, row)| {
            let mut r = vec![label.to_string()];
            r.extend(row.iter().map(|v| sig4(*v)));
            r
        })
        .collect();
    print(&format!(
        "{}{} of {} replicates succeeded ({}, M = {}, T = {})\n",
        render_table(&header, &rows),
        summary.successes(),
        summary.replicates,
        cfg.method,
        cfg.intervals,
        cfg.horizon
    ));
    if summary.warning {
        eprintln!(
            "warning: {} of {} replicates failed; first failure: {}",
            summary.failures.len(),
            summary.replicates,
            summary.failures[0].1
        );
    }

    let mut meta = meta_header("bootstrap", "bootstrap");
    meta.insert("horizon".into(), Value::Float(cfg.horizon));
    meta.insert("intervals".into(), Value::Integer(cfg.intervals as i64));
    meta.insert("replicates".into(), Value::Integer(cfg.replicates as i64));
    meta.insert("method".into(), Value::String(cfg.method.to_string()));
    meta.insert("seed".into(), seed_value(cfg.master_seed));
    optimizer_meta(&cfg.options, &mut meta);
    meta.extend(model_table(&model));
    if let Some(p) = &out {
        meta.insert("out".into(), path_value(p));
    }
    if let Some(p) = &out_reps {
        meta.insert("out_replicates".into(), path_value(p));
    }
    if let Some(p) = &out {
        let body = bootstrap_csv(&summary);
        write_with_meta(p, &meta, |buf| {
            buf.extend_from_slice(body.as_bytes());
            Ok(())
        })?;
    }
    if let Some(p) = &out_reps {
        let mut m = meta.clone();
        m.insert("kind".into(), Value::String("bootstrap-replicates".into()));
        fs::write(p, replicates_csv(&summary)).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
        write_meta(p, &m)?;
    }
    Ok(())
}

// --------------------------------------------------------------------- gof

const GOF_NAMES: [&str; 9] = ["JB1", "JB2", "mu1", "mu2", "sigma1", "sigma2", "rho1", "rho2", "rho12"];

fn gof_text(rows: &[(String, Vec<f64>, Vec<f64>)], n: usize) -> String {
    let mut header = vec!["copula".to_string()];
    header.extend(GOF_NAMES.iter().map(|s| s.to_string()));
    let mut body = Vec::new();
    for (copula, stat, p) in rows {
        let mut r = vec![copula.clone()];
        r.extend(stat.iter().map(|v| format!("{v:.2}")));
        body.push(r);
        let mut r = vec![String::new()];
        r.extend(p.iter().map(|v| format!("({v:.2})")));
        body.push(r);
    }
    format!("{}scores matrix: {n} x 2\n", render_table(&header, &body))
}

pub fn gof_cmd(a: &GofArgs, s: &Settings) -> Result<(), CliError> {
    if a.model.is_none() && s.path("model")?.is_none() && !s.has_model() {
        return Err(validation("gof needs a fitted model: --model <file> (e.g. the output of fit)"));
    }
    let model = resolve_model(a.model.as_deref(), s)?;
    let panel_path = a.panel.clone().or(s.path("panel")?).ok_or_else(|| validation("gof needs --panel"))?;
    check_readable(&panel_path)?;
    let out = a.out.clone().or(s.path("out")?);
    let out_scores = a.out_scores.clone().or(s.path("out_scores")?);
    for p in out.iter().chain(&out_scores) {
        check_writable(p)?;
    }
    let horizon = panel_horizon(a.horizon, &panel_path, s)?;
    let panel = load_panel(&panel_path, horizon)?;

    let t = gof_transform(&model, &panel)?;
    let report = gof_tests(&t.w)?;
    let entries = report.entries();
    let stat: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let p: Vec<f64> = entries.iter().map(|e| e.2).collect();
    let copula = model.copula().family().to_string();
    let mut text = gof_text(&[(copula.clone(), stat.clone(), p.clone())], report.rows);
    for (name, _, pv) in &entries {
        if *pv < 0.05 {
            let level = if *pv < 0.01 { "1%" } else { "5%" };
            text.push_str(&format!("{name}: p = {pv:.4}, rejected at the {level} level\n"));
        }
    }
    print(&text);

    let mut meta = meta_header("gof", "gof");
    meta.insert("panel".into(), path_value(&panel_path));
    meta.insert("horizon".into(), Value::Float(horizon));
    meta.extend(model_table(&model));
    if let Some(p) = &out {
        meta.insert("out".into(), path_value(p));
    }
    if let Some(p) = &out_scores {
        meta.insert("out_scores".into(), path_value(p));
    }
    if let Some(path) = &out {
        let fmt = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let body = format!(
            "copula,row,{}\n{copula},statistic,{}\n{copula},p-value,{}\n",
            GOF_NAMES.join(","),
            fmt(&stat),
            fmt(&p)
        );
        write_with_meta(path, &meta, |buf| {
            buf.extend_from_slice(body.as_bytes());
            Ok(())
        })?;
    }
    if let Some(path) = &out_scores {
        let mut body = String::from("interval_index,v1,v2,w1,w2\n");
        for ((row, v), w) in t.rows.iter().zip(&t.v).zip(&t.w) {
            body.push_str(&format!("{},{},{},{},{}\n", row + 1, v[0], v[1], w[0], w[1]));
        }
        let mut m = meta.clone();
        m.insert("kind".into(), Value::String("gof-scores".into()));
        fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        write_meta(path, &m)?;
    }
    Ok(())
}

// ------------------------------------------------------------------ ingest

fn mapping(s: &Settings) -> Result<ColumnMapping, CliError> {
    let mut m = ColumnMapping::default();
    // configured names are tried before the built-in aliases
    let prepend = |key: &str, list: &mut Vec<String>| -> Result<(), CliError> {
        if let Some(v) = s.str(key)? {
            list.insert(0, v);
        }
        Ok(())
    };
    prepend("date_column", &mut m.date)?;
    prepend("building_column", &mut m.building)?;
    prepend("contents_column", &mut m.contents)?;
    prepend("profit_column", &mut m.profit)?;
    prepend("date_format", &mut m.date_formats)?;
    Ok(m)
}

pub fn ingest_cmd(a: &IngestArgs, s: &Settings) -> Result<(), CliError> {
    let input = a.input.clone().or(s.path("input")?).ok_or_else(|| validation("ingest needs --input <raw loss file>"))?;
    check_readable(&input)?;
    let first = a.start_year.or(s.i32("start_year")?).unwrap_or(1980);
    let last = a.end_year.or(s.i32("end_year")?).unwrap_or(1990);
    let threshold = a.threshold.or(s.f64("threshold")?).unwrap_or(1.0);
    let outs: [(&str, Option<PathBuf>); 4] = [
        ("out_panel", a.out_panel.clone().or(s.path("out_panel")?)),
        ("out_jumps1", a.out_jumps1.clone().or(s.path("out_jumps1")?)),
        ("out_jumps2", a.out_jumps2.clone().or(s.path("out_jumps2")?)),
        ("out_events", a.out_events.clone().or(s.path("out_events")?)),
    ];
    if outs.iter().all(|(_, p)| p.is_none()) {
        return Err(validation("ingest needs at least one of --out-panel, --out-jumps1, --out-jumps2, --out-events"));
    }
    for (_, p) in &outs {
        if let Some(p) = p {
            check_writable(p)?;
        }
    }
    let window = ObservationWindow::years(first, last)?;
    let mapping = mapping(s)?;

    let mut data = read_raw_losses(open(&input)?, &mapping)?;
    if let Some(meta) = read_meta(&input)? {
        if let Some(p) = meta.str("provenance")? {
            data.provenance = p.parse()?;
        }
    }
    for (row, msg) in &data.bad_rows {
        eprintln!("warning: skipped data row {row}: {msg}");
    }
    let losses = preprocess(&data, window, threshold)?;
    let panel = build_monthly_panel(&losses)?;

    let mut meta = meta_header("panel", "ingest");
    meta.insert("input".into(), path_value(&input));
    meta.insert("start_year".into(), Value::Integer(first.into()));
    meta.insert("end_year".into(), Value::Integer(last.into()));
    meta.insert("threshold".into(), Value::Float(threshold));
    meta.insert("horizon".into(), Value::Float(losses.horizon()));
    meta.insert("intervals".into(), Value::Integer(panel.intervals() as i64));
    meta.insert("events_retained".into(), Value::Integer(losses.events.len() as i64));
    meta.insert("provenance".into(), Value::String(Provenance::Transformed.as_str().into()));
    for key in ["date_column", "building_column", "contents_column", "profit_column", "date_format"] {
        if let Some(v) = s.str(key)? {
            meta.insert(key.into(), Value::String(v));
        }
    }
    for (key, p) in &outs {
        if let Some(p) = p {
            meta.insert((*key).into(), path_value(p));
        }
    }
    for (key, p) in &outs {
        let Some(p) = p else { continue };
        let mut m = meta.clone();
        match *key {
            "out_panel" => write_with_meta(p, &m, |buf| Ok(write_panel(&panel, buf)?))?,
            "out_jumps1" | "out_jumps2" => {
                let s = if *key == "out_jumps1" { &losses.s1 } else { &losses.s2 };
                m.insert("kind".into(), Value::String("jumps".into()));
                write_with_meta(p, &m, |buf| Ok(write_jumps(s, buf)?))?
            }
            _ => {
                m.insert("kind".into(), Value::String("events".into()));
                write_with_meta(p, &m, |buf| Ok(write_events(&losses.events, buf, false)?))?
            }
        }
    }
    print(&format!(
        "read {} records ({} unreadable rows skipped); retained {} events above {threshold}: |s1| = {}, |s2| = {}; panel {} x 2 over {} years\n",
        data.records.len(),
        data.bad_rows.len(),
        losses.events.len(),
        losses.s1.len(),
        losses.s2.len(),
        panel.intervals(),
        losses.horizon()
    ));
    Ok(())
}

// ------------------------------------------------------------------ report

fn split_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect()
}

fn parse_cells(cells: &[String], path: &Path) -> Result<Vec<f64>, CliError> {
    cells
        .iter()
        .map(|c| c.parse::<f64>().map_err(|_| validation(format!("{}: cannot parse number '{c}'", path.display()))))
        .collect()
}

fn report_bootstrap(text: &str, path: &Path) -> Result<String, CliError> {
    let rows = split_csv(text);
    let header = &rows[0];
    if rows.len() != 4 || rows.iter().any(|r| r.len() != header.len()) {
        return Err(validation(format!("{}: expected a header and three rows", path.display())));
    }
    let mut out_header = vec![String::new()];
    out_header.extend(header[1..].iter().cloned());
    let body = rows[1..]
        .iter()
        .map(|r| {
            let mut cells = vec![r[0].clone()];
            cells.extend(parse_cells(&r[1..], path)?.into_iter().map(sig4));
            Ok(cells)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(render_table(&out_header, &body))
}

fn report_gof(text: &str, path: &Path) -> Result<String, CliError> {
    let rows = split_csv(text);
    let mut groups = Vec::new();
    let mut i = 1;
    while i < rows.len() {
        let (a, b) = (&rows[i], rows.get(i + 1).ok_or_else(|| validation(format!("{}: statistic row without p-values", path.display())))?);
        if a.len() != 11 || b.len() != 11 || a[1] != "statistic" || b[1] != "p-value" {
            return Err(validation(format!("{}: malformed goodness-of-fit rows", path.display())));
        }
        groups.push((a[0].clone(), parse_cells(&a[2..], path)?, parse_cells(&b[2..], path)?));
        i += 2;
    }
    let text = gof_text(&groups, 0);
    // the row count is not stored in the CSV itself
    Ok(text.lines().filter(|l| !l.starts_with("scores matrix")).map(|l| format!("{l}\n")).collect())
}

fn report_fit(text: &str, path: &Path) -> Result<String, CliError> {
    let model: BcppModel = crate::config::read_model(path)?;
    let t: Table = text.parse().map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let names = parameter_names(&model);
    let values = bcpp::estimate::parameter_values(&model);
    let loglik = t.get("loglik").and_then(Value::as_float).unwrap_or(f64::NAN);
    let converged = t.get("converged").and_then(Value::as_bool).unwrap_or(false);
    let method = t.get("method").and_then(Value::as_str).unwrap_or("unknown").to_string();
    Ok(fit_text(&names, &values, loglik, converged, &method))
}

fn report_panel(path: &Path) -> Result<String, CliError> {
    let horizon = match read_meta(path)? {
        Some(m) => m.f64("horizon")?.unwrap_or(DEFAULT_HORIZON),
        None => DEFAULT_HORIZON,
    };
    let panel = load_panel(path, horizon)?;
    let totals = panel.total_counts();
    let both = panel.counts().iter().filter(|c| c[0] > 0 && c[1] > 0).count();
    let header = vec![String::new(), "margin 1".into(), "margin 2".into()];
    let mean_max = |j: usize| {
        let (sum, n) = panel
            .maxima()
            .iter()
            .zip(panel.counts())
            .filter(|(_, c)| c[j] > 0)
            .fold((0.0, 0usize), |(s, n), (z, _)| (s + z[j], n + 1));
        if n == 0 { f64::NAN } else { sum / n as f64 }
    };
    let rows = vec![
        vec!["jumps".into(), totals[0].to_string(), totals[1].to_string()],
        vec!["mean interval maximum".into(), sig4(mean_max(0)), sig4(mean_max(1))],
    ];
    Ok(format!(
        "{} intervals of length {} ({} with jumps in both margins)\n{}",
        panel.intervals(),
        sig4(panel.dt()),
        both,
        render_table(&header, &rows)
    ))
}

pub fn report_cmd(a: &ReportArgs) -> Result<(), CliError> {
    if a.inputs.is_empty() {
        return Err(validation("report needs at least one input file"));
    }
    let mut out = String::new();
    for path in &a.inputs {
        check_readable(path)?;
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let kind = match read_meta(path)? {
            Some(m) => m.str("kind")?,
            None => None,
        };
        let first = text.lines().next().unwrap_or("");
        let kind = kind.unwrap_or_else(|| {
            if first.starts_with("row,") {
                "bootstrap".into()
            } else if first.starts_with("copula,row,") {
                "gof".into()
            } else if first.starts_with("interval_index,z1") {
                "panel".into()
            } else {
                "fit".into()
            }
        });
        let section = match kind.as_str() {
            "bootstrap" => report_bootstrap(&text, path)?,
            "gof" => report_gof(&text, path)?,
            "panel" => report_panel(path)?,
            "fit" => report_fit(&text, path)?,
            other => return Err(validation(format!("{}: cannot report on files of kind '{other}'", path.display()))),
        };
        out.push_str(&format!("{} ({kind})\n{section}\n", path.display()));
    }
    print(&out);
    if let Some(p) = &a.out {
        check_writable(p)?;
        fs::write(p, &out).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}
