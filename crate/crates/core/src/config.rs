//! Flat `key = value` configuration files mirroring the command-line flags.
//!
//! ```text
//! # detector comparison point
//! q = 8
//! snr_db = 0:30:2
//! ```
//!
//! Underscores in keys become dashes, so `snr_db` sets `--snr-db`. Flags
//! given on the command line win over the file.

use std::path::Path;

use crate::{Error, Result};

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidParams(format!(
                "config line {}: expected key = value",
                lineno + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::InvalidParams(format!(
                "config line {}: bad key",
                lineno + 1
            )));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Expands config entries into flags, skipping any flag already present in
/// `given`. `true`/`false` values toggle switches listed in `switches`.
pub fn config_flags(
    entries: &[(String, String)],
    given: &[String],
    switches: &[&str],
) -> Vec<String> {
    let present = |key: &str| {
        let flag = format!("--{key}");
        given
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut out = Vec::new();
    for (key, value) in entries {
        if present(key) {
            continue;
        }
        if switches.contains(&key.as_str()) {
            if value.eq_ignore_ascii_case("true") {
                out.push(format!("--{key}"));
            }
            continue;
        }
        out.push(format!("--{key}"));
        out.push(value.clone());
    }
    out
}
