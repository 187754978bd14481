//! `--config file.json`: a JSON object whose keys mirror the long flags.
//!
//! The object is expanded into flags placed right after the subcommand name,
//! ahead of the flags typed on the command line. Every option overrides
//! itself, so a flag given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;

/// Global options that take a value, so their value is not mistaken for the subcommand.
const GLOBAL_VALUED: [&str; 4] = ["--jobs", "--seed", "--config", "--format"];

pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
        if s == "--config" {
            return it.next().cloned();
        }
    }
    None
}

pub fn config_flags(path: &Path) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("config {} is not JSON: {e}", path.display()))?;
    let obj = v.as_object().ok_or_else(|| format!("config {} must be a JSON object", path.display()))?;
    let mut out = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                out.push(flag.into());
                out.push(joined.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("config value {other} is not a scalar")),
    }
}

/// Splices `extra` in right after the subcommand name.
pub fn splice(args: &[OsString], extra: Vec<OsString>) -> Vec<OsString> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&s.as_ref()) {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            break;
        }
    }
    let cut = (i + 1).min(args.len());
    let mut out = args[..cut].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[cut..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn finds_config_in_either_spelling() {
        assert_eq!(config_path(&os(&["h", "scan", "--config", "a.json"])), Some("a.json".into()));
        assert_eq!(config_path(&os(&["h", "--config=b.json", "scan"])), Some("b.json".into()));
        assert_eq!(config_path(&os(&["h", "scan"])), None);
    }

    #[test]
    fn splices_after_subcommand() {
        let args = os(&["h", "--jobs", "2", "scan", "--t1", "9"]);
        let out = splice(&args, os(&["--t1", "5", "--t0", "1"]));
        assert_eq!(out, os(&["h", "--jobs", "2", "scan", "--t1", "5", "--t0", "1", "--t1", "9"]));
    }

    #[test]
    fn expands_values() {
        let dir = std::env::temp_dir().join(format!("halfint-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"checkpoints": [25, 50], "t0": 0.5, "form": "yoshida_g", "quiet": false}"#).unwrap();
        let flags = config_flags(&path).unwrap();
        assert_eq!(flags, os(&["--checkpoints", "25,50", "--t0", "0.5", "--form", "yoshida_g"]));
    }
}
