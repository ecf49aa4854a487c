//! Run configuration: command-line flags merged with an optional JSON file.
//!
//! Both sources are flattened into one key map before typing. Distribution
//! and duty-cycle values may use the compact colon syntax in either source;
//! they are normalized to their JSON object form first, so `"exp:0.001"` and
//! `{"kind":"exponential","rate":0.001}` are the same value. A key set by
//! both sources must agree, otherwise the run is refused.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use dcproc_core::proc::DistSpec;
use dcproc_core::sched::DutyCycleSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const DIST_KEYS: [&str; 2] = ["s_dist", "c_dist"];
pub const DC_KEY: &str = "dc";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "dcproc-out";

/// Everything that determines a run's outputs. Embedded in every file the
/// run writes. The worker-thread cap is deliberately absent: it never
/// changes results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig<P> {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub out: PathBuf,
    pub params: P,
}

impl<P: Serialize> RunConfig<P> {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("run config serializes")
    }
}

fn normalize_entry(key: &str, v: Value) -> Result<Value> {
    if v.is_null() {
        return Ok(v);
    }
    if DIST_KEYS.contains(&key) {
        let d = match &v {
            Value::String(s) => DistSpec::from_str(s)?,
            _ => serde_json::from_value::<DistSpec>(v)?,
        };
        d.validate()?;
        Ok(serde_json::to_value(d)?)
    } else if key == DC_KEY {
        let dc = match &v {
            Value::String(s) => DutyCycleSpec::from_str(s)?,
            _ => serde_json::from_value::<DutyCycleSpec>(v)?,
        };
        dc.validate()?;
        Ok(serde_json::to_value(dc)?)
    } else {
        Ok(v)
    }
}

pub fn normalize(map: Map<String, Value>) -> Result<Map<String, Value>> {
    map.into_iter()
        .map(|(k, v)| {
            let v = normalize_entry(&k, v).with_context(|| format!("invalid value for `{k}`"))?;
            Ok((k, v))
        })
        .collect()
}

/// Loose equality: numbers compare by value so `1` and `1.0` agree.
fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same(p, q))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, p)| y.get(k).is_some_and(|q| same(p, q)))
        }
        _ => a == b,
    }
}

/// Reads a config file. Accepts a flat key map, a `RunConfig` object, or any
/// output file carrying one under `"run"`.
pub fn read_file(path: &Path, command: &str) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let v: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(mut map) = v else {
        bail!("config {} must hold a JSON object", path.display());
    };
    if let Some(Value::Object(run)) = map.remove("run") {
        map = run;
    }
    if let Some(Value::Object(params)) = map.remove("params") {
        if let Some(c) = map.remove("command") {
            if c.as_str() != Some(command) {
                bail!(
                    "config {} is for command {c}, not {command:?}",
                    path.display()
                );
            }
        }
        map.remove("version");
        map.extend(params);
    }
    Ok(map)
}

/// Merges the command line over the file, refusing disagreements.
pub fn merge(file: Map<String, Value>, cli: Map<String, Value>) -> Result<Map<String, Value>> {
    let mut out = normalize(file)?;
    for (k, v) in normalize(cli)? {
        if let Some(prev) = out.get(&k) {
            if !same(prev, &v) {
                bail!("conflicting values for `{k}`: config file has {prev}, command line has {v}");
            }
            continue;
        }
        out.insert(k, v);
    }
    Ok(out)
}

/// Types a merged map into the run configuration of `command`.
pub fn resolve<P: DeserializeOwned>(
    command: &str,
    mut map: Map<String, Value>,
) -> Result<RunConfig<P>> {
    let seed = match map.remove("seed") {
        None => DEFAULT_SEED,
        Some(v) => v
            .as_u64()
            .with_context(|| format!("`seed` must be a non-negative integer, got {v}"))?,
    };
    let out = match map.remove("out") {
        None => PathBuf::from(DEFAULT_OUT),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(v) => bail!("`out` must be a path, got {v}"),
    };
    let params = serde_json::from_value(Value::Object(map))
        .with_context(|| format!("invalid {command} configuration"))?;
    Ok(RunConfig {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        out,
        params,
    })
}

/// Flags given on the command line, as a key map. Absent options and empty
/// lists are left out so they never conflict with the file.
pub fn cli_map<T: Serialize>(args: &T) -> Result<Map<String, Value>> {
    match serde_json::to_value(args)? {
        Value::Object(m) => Ok(m
            .into_iter()
            .filter(|(_, v)| !v.is_null() && v.as_array().map_or(true, |a| !a.is_empty()))
            .collect()),
        _ => bail!("command-line arguments must form a map"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn compact_and_object_forms_agree() {
        let file = obj(
            json!({"dc": {"kind": "deterministic", "tau": 20, "period": 100}, "s_dist": "exp:0.001"}),
        );
        let cli =
            obj(json!({"dc": "det:20:100", "s_dist": {"kind": "exponential", "rate": 0.001}}));
        let m = merge(file, cli).unwrap();
        assert_eq!(m["dc"]["tau"], json!(20.0));
        assert_eq!(m["s_dist"]["rate"], json!(0.001));
    }

    #[test]
    fn conflict_is_an_error() {
        let err = merge(obj(json!({"samples": 10})), obj(json!({"samples": 11}))).unwrap_err();
        assert!(err.to_string().contains("samples"));
        assert!(merge(obj(json!({"phi": 1})), obj(json!({"phi": 1.0}))).is_ok());
        assert!(merge(
            obj(json!({"dc": "det:20:100"})),
            obj(json!({"dc": "det:80:100"}))
        )
        .is_err());
    }

    #[test]
    fn invalid_compact_values_fail() {
        assert!(normalize(obj(json!({"dc": "det:0:100"}))).is_err());
        assert!(normalize(obj(json!({"s_dist": "gamma:1"}))).is_err());
        assert!(normalize(obj(json!({"s_dist": {"kind": "exponential", "rate": -1}}))).is_err());
        assert_eq!(
            normalize(obj(json!({"name": "det:0:100"}))).unwrap()["name"],
            json!("det:0:100")
        );
    }

    #[derive(Debug, Deserialize, Serialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default)]
        n: u32,
    }

    #[test]
    fn resolve_defaults_and_unknown_keys() {
        let r: RunConfig<P> = resolve("x", Map::new()).unwrap();
        assert_eq!((r.seed, r.params.n), (DEFAULT_SEED, 0));
        assert!(resolve::<P>("x", obj(json!({"m": 1}))).is_err());
        assert!(resolve::<P>("x", obj(json!({"seed": -1}))).is_err());
    }

    #[test]
    fn file_forms() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let run = json!({"run": {"command": "x", "version": "0", "seed": 3, "out": "o", "params": {"n": 2}}});
        std::fs::write(&path, run.to_string()).unwrap();
        let m = read_file(&path, "x").unwrap();
        let r: RunConfig<P> = resolve("x", m).unwrap();
        assert_eq!((r.seed, r.params.n, r.out), (3, 2, PathBuf::from("o")));
        assert!(read_file(&path, "y").is_err());
    }
}
