//! Key-value config files, model files and `.meta` sidecars.
//!
//! All three are flat TOML tables. A config may carry any run key plus an
//! inline model; a model file carries model keys plus, when it was written by
//! `fit`, the fit diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use bcpp::{BcppModel, CopulaFamily, DistFamily, JumpSizeDist, LevyCopula, Margin};
use toml::{Table, Value};

use crate::error::CliError;

pub const MODEL_KEYS: &[&str] = &[
    "copula", "delta", "lambda1", "margin1", "theta1", "alpha1", "beta1", "lambda2", "margin2",
    "theta2", "alpha2", "beta2",
];

/// Keys written by `fit` next to the model.
const FIT_KEYS: &[&str] = &["method", "loglik", "converged", "iterations"];

const RUN_KEYS: &[&str] = &[
    // bookkeeping written into sidecars
    "kind", "version", "command",
    // run parameters
    "horizon", "intervals", "replicates", "seed", "method", "jobs",
    "xtol", "ftol", "max_iter", "grid_points", "delta_init", "simplex_spread",
    // files
    "model", "panel", "events", "jumps1", "jumps2", "input", "out", "out_panel", "out_events",
    "out_jumps1", "out_jumps2", "out_replicates", "out_scores", "keep_origins",
    // ingest
    "threshold", "start_year", "end_year", "date_column", "building_column", "contents_column",
    "profit_column", "date_format", "provenance", "events_retained",
];

fn read_table(path: &Path, what: &str) -> Result<Table, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {what} {}: {e}", path.display())))?;
    text.parse::<Table>()
        .map_err(|e| CliError::Validation(format!("{what} {} is not valid key = value text: {e}", path.display())))
}

fn check_keys(t: &Table, allowed: &[&[&str]], path: &Path) -> Result<(), CliError> {
    for (k, v) in t {
        if !allowed.iter().any(|set| set.contains(&k.as_str())) {
            return Err(CliError::Validation(format!("{}: unknown key '{k}'", path.display())));
        }
        if v.is_table() || v.is_array() {
            return Err(CliError::Validation(format!("{}: key '{k}' must be a plain value", path.display())));
        }
    }
    Ok(())
}

/// Typed access to a flat table with error messages that name the source.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    table: Table,
    source: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let table = read_table(p, "config")?;
                check_keys(&table, &[RUN_KEYS, MODEL_KEYS, FIT_KEYS], p)?;
                Ok(Self { table, source: Some(p.to_path_buf()) })
            }
        }
    }

    fn origin(&self, key: &str) -> String {
        match &self.source {
            Some(p) => format!("key '{key}' in {}", p.display()),
            None => format!("key '{key}'"),
        }
    }

    pub fn has_model(&self) -> bool {
        MODEL_KEYS.iter().any(|k| self.table.contains_key(*k))
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        value_f64(&self.table, key).map_err(|m| CliError::Validation(format!("{}: {m}", self.origin(key))))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(CliError::Validation(format!(
                "{}: expected a nonnegative integer, got {v}",
                self.origin(key)
            ))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn i32(&self, key: &str) -> Result<Option<i32>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => i32::try_from(*i)
                .map(Some)
                .map_err(|_| CliError::Validation(format!("{}: {i} out of range", self.origin(key)))),
            Some(v) => Err(CliError::Validation(format!("{}: expected an integer, got {v}", self.origin(key)))),
        }
    }

    pub fn str(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(CliError::Validation(format!("{}: expected a string, got {v}", self.origin(key)))),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(CliError::Validation(format!("{}: expected true or false, got {v}", self.origin(key)))),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        Ok(self.str(key)?.map(PathBuf::from))
    }
}

fn value_f64(t: &Table, key: &str) -> Result<Option<f64>, String> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(f)) => Ok(Some(*f)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(v) => Err(format!("expected a number, got {v}")),
    }
}

/// Model used when neither a model file nor inline model keys are given:
/// λ₁ = λ₂ = 1000, exponential jumps with θ = 1, Clayton δ = 1.
pub fn default_model() -> BcppModel {
    let e = JumpSizeDist::exponential(1.0).expect("valid default");
    BcppModel::new(1000.0, e, 1000.0, e, LevyCopula::clayton(1.0).expect("valid default")).expect("valid default")
}

fn model_from_table(t: &Table, origin: &str) -> Result<BcppModel, CliError> {
    let invalid = |m: String| CliError::Validation(format!("{origin}: {m}"));
    let num = |key: &str| -> Result<f64, CliError> {
        value_f64(t, key)
            .map_err(|m| invalid(format!("{key}: {m}")))?
            .ok_or_else(|| invalid(format!("missing key '{key}'")))
    };
    let text = |key: &str, default: &str| -> Result<String, CliError> {
        match t.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(invalid(format!("{key}: expected a string, got {v}"))),
        }
    };
    let dist = |j: usize| -> Result<JumpSizeDist, CliError> {
        let family: DistFamily = text(&format!("margin{j}"), "exponential")?.parse().map_err(|e: bcpp::Error| invalid(e.to_string()))?;
        let params = family
            .param_names(j)
            .iter()
            .map(|k| num(k))
            .collect::<Result<Vec<_>, _>>()?;
        JumpSizeDist::from_params(family, &params).map_err(|e| invalid(e.to_string()))
    };
    let family: CopulaFamily = text("copula", "clayton")?.parse().map_err(|e: bcpp::Error| invalid(e.to_string()))?;
    let copula = LevyCopula::new(family, num("delta")?).map_err(|e| invalid(e.to_string()))?;
    BcppModel::new(num("lambda1")?, dist(1)?, num("lambda2")?, dist(2)?, copula).map_err(|e| invalid(e.to_string()))
}

pub fn read_model(path: &Path) -> Result<BcppModel, CliError> {
    let t = read_table(path, "model file")?;
    check_keys(&t, &[MODEL_KEYS, FIT_KEYS, &["kind", "version", "command"]], path)?;
    model_from_table(&t, &path.display().to_string())
}

/// Model from `--model`, else the config's `model` path, else inline model
/// keys in the config, else the default.
pub fn resolve_model(flag: Option<&Path>, settings: &Settings) -> Result<BcppModel, CliError> {
    if let Some(p) = flag {
        return read_model(p);
    }
    if let Some(p) = settings.path("model")? {
        return read_model(&p);
    }
    if settings.has_model() {
        let origin = settings.source.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        return model_from_table(settings.table(), &origin);
    }
    Ok(default_model())
}

/// Model keys in a fixed order.
pub fn model_table(m: &BcppModel) -> Table {
    let mut t = Table::new();
    t.insert("copula".into(), Value::String(m.copula().family().to_string()));
    t.insert("delta".into(), Value::Float(m.copula().delta()));
    for (j, margin) in [(1, Margin::First), (2, Margin::Second)] {
        let d = m.dist(margin);
        t.insert(format!("lambda{j}"), Value::Float(m.lambda(margin)));
        t.insert(format!("margin{j}"), Value::String(d.family().to_string()));
        for (name, v) in d.family().param_names(j).into_iter().zip(d.params()) {
            t.insert(name, Value::Float(v));
        }
    }
    t
}

/// Path of the sidecar that describes `path`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Sidecar of an input file, if one exists.
pub fn read_meta(path: &Path) -> Result<Option<Settings>, CliError> {
    let meta = meta_path(path);
    if !meta.exists() {
        return Ok(None);
    }
    Settings::load(Some(&meta)).map(Some)
}
