//! Grid syntax and layered run configuration.
//!
//! A run config is resolved as defaults, then the JSON `--config` file, then
//! explicit flags. A file written as a sidecar (an object with a `config`
//! key) is accepted as is.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// A parsed `--b` list.
#[derive(Debug, Clone)]
pub struct Sizes(pub Vec<usize>);

/// A parsed grid flag.
#[derive(Debug, Clone)]
pub struct Grid(pub Vec<f64>);

pub fn sizes_flag(text: &str) -> Result<Sizes, String> {
    parse_sizes(text).map(Sizes)
}

pub fn grid_flag(text: &str) -> Result<Grid, String> {
    parse_grid(text).map(Grid)
}

/// Parses `start:stop:step` (inclusive of `stop` within half a step), a
/// comma-separated list or a single number.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{s}` is not a number"))
            .and_then(|x| if x.is_finite() { Ok(x) } else { Err(format!("`{s}` is not finite")) })
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 {
                return Err(format!("grid step must be positive, got {step}"));
            }
            if stop < start {
                return Err(format!("grid stop {stop} is below start {start}"));
            }
            // Last point may overshoot `stop` by strictly less than half a step.
            let count = ((stop - start) / step + 0.5 - 1e-9).floor() as u64;
            if count > 1_000_000 {
                return Err("grid has more than a million points".into());
            }
            Ok((0..=count).map(|k| tidy(start + k as f64 * step)).collect())
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(format!("expected start:stop:step or a comma list, got `{text}`")),
    }
}

/// Drops accumulated binary noise such as `0.58000000000000007`.
fn tidy(x: f64) -> f64 {
    let scale = 1e12;
    let y = (x * scale).round() / scale;
    if (y - x).abs() < 1e-12 {
        y
    } else {
        x
    }
}

pub fn parse_sizes(text: &str) -> Result<Vec<usize>, String> {
    let sizes = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not a batch size")))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.contains(&0) {
        return Err("batch sizes must be at least 1".into());
    }
    Ok(sizes)
}

/// Flag overrides collected as a JSON object, keyed by dotted paths.
#[derive(Default)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn set<T: Serialize>(&mut self, path: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            let v = serde_json::to_value(v).expect("flag values serialise");
            insert(&mut self.0, path, v);
        }
        self
    }
}

fn insert(map: &mut Map<String, Value>, path: &str, value: Value) {
    match path.split_once('.') {
        Some((head, rest)) => {
            let entry = map.entry(head).or_insert_with(|| Value::Object(Map::new()));
            if !entry.is_object() {
                *entry = Value::Object(Map::new());
            }
            insert(entry.as_object_mut().unwrap(), rest, value);
        }
        None => {
            map.insert(path.to_string(), value);
        }
    }
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, top) => *slot = top,
    }
}

pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    if !value.is_object() {
        return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
    }
    Ok(value)
}

/// Layers `file` and `flags` over `T::default()`.
pub fn resolve<T>(file: Option<&Path>, flags: Overrides) -> Result<T, CliError>
where
    T: Default + Serialize + DeserializeOwned,
{
    let mut value = serde_json::to_value(T::default()).expect("defaults serialise");
    if let Some(path) = file {
        merge(&mut value, read_config_file(path)?);
    }
    merge(&mut value, Value::Object(flags.0));
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}
