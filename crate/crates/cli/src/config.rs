//! Flat `key = value` config files, applied as environment defaults so the
//! precedence is flags > environment > config file > built-in defaults.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::CommandFactory;

use crate::args::{Cli, ENV_PREFIX};

/// The `--config` path from argv, or from the environment.
pub fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    std::env::var_os(format!("{ENV_PREFIX}CONFIG")).map(PathBuf::from)
}

fn known_keys() -> BTreeSet<String> {
    let cmd = Cli::command();
    let mut keys = BTreeSet::new();
    let mut collect = |c: &clap::Command| {
        for a in c.get_arguments() {
            if let Some(l) = a.get_long() {
                keys.insert(l.to_string());
            }
        }
    };
    collect(&cmd);
    for sub in cmd.get_subcommands() {
        collect(sub);
    }
    keys
}

pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('-', "_").to_ascii_uppercase())
}

/// Reads the file and exports every key not already set in the environment.
pub fn apply(path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let known = known_keys();
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), n + 1))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" || !known.contains(&key) {
            return Err(format!("{}:{}: unknown key {key:?}", path.display(), n + 1));
        }
        pairs.push((env_name(&key), v.trim().to_string()));
    }
    for (name, value) in pairs {
        if std::env::var_os(&name).is_none() {
            // Single-threaded at this point: nothing else reads the environment.
            std::env::set_var(name, value);
        }
    }
    Ok(())
}
