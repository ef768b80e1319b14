//! Config file merging and flag value parsing.
//!
//! The config file is TOML with one table per subcommand, keyed by the long
//! flag names (`sigma-drift = 0.5` or `sigma_drift = 0.5`):
//!
//! ```toml
//! [campaign]
//! vary = "drift"
//! values = "0,0.25,0.5"
//! seeds = "30"
//! ```
//!
//! Flags given on the command line win over the file.

use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn load(path: &Path) -> CliResult<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

/// Overlays the flags set in `cli` on the `[section]` table of `file`.
pub fn merge<T: Serialize + DeserializeOwned>(cli: &T, file: Option<&toml::Table>, section: &str) -> CliResult<T> {
    let mut base = serde_json::Map::new();
    if let Some(table) = file.and_then(|f| f.get(section)) {
        let table = table
            .as_table()
            .ok_or_else(|| CliError::Usage(format!("config section [{section}] must be a table")))?;
        for (k, v) in table {
            let v = serde_json::to_value(v).map_err(|e| CliError::Usage(format!("config [{section}].{k}: {e}")))?;
            base.insert(k.replace('_', "-"), v);
        }
    }
    let flags = serde_json::to_value(cli).map_err(|e| CliError::Usage(e.to_string()))?;
    for (k, v) in flags.as_object().into_iter().flatten() {
        if !v.is_null() {
            base.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(serde_json::Value::Object(base))
        .map_err(|e| CliError::Usage(format!("config [{section}]: {e}")))
}

pub fn require<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

/// Comma-separated values.
pub fn list<T: FromStr>(s: &str, flag: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| CliError::Usage(format!("--{flag}: bad value `{p}`: {e}"))))
        .collect()
}

/// Comma-separated integers where an item may be a range `a..b` or `a..=b`.
pub fn int_list(s: &str, flag: &str) -> CliResult<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || CliError::Usage(format!("--{flag}: bad value `{part}`"));
        if let Some((a, b)) = part.split_once("..") {
            let (b, inclusive) = b.strip_prefix('=').map_or((b, false), |b| (b, true));
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if inclusive {
                out.extend(a..=b);
            } else {
                out.extend(a..b);
            }
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("--{flag} is empty")));
    }
    Ok(out)
}

/// `N` means seeds `0..N`; lists and ranges are taken literally.
pub fn seeds(s: &str) -> CliResult<Vec<u64>> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u64>() {
        if n == 0 {
            return Err(CliError::Usage("--seeds must be at least 1".into()));
        }
        return Ok((0..n).collect());
    }
    int_list(s, "seeds")
}

pub fn parse<T: FromStr>(s: &str, flag: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}
