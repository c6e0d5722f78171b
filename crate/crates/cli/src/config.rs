//! Flat `key = value` config files merged into the command line.
//!
//! Keys are long flag names (`radius`, `r-list`, `mu`); underscores and
//! hyphens are interchangeable and matching ignores case. Booleans take
//! `true`/`false`. Flags given on the command line win over the file, and keys
//! that belong to other subcommands are ignored.

use clap::{ArgAction, Command};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config key {0:?} is not a flag of any subcommand")]
    UnknownKey(String),
    #[error("config key {key:?}: boolean must be true or false, got {value:?}")]
    Bool { key: String, value: String },
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-").to_lowercase()
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = normalize(key);
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((key, value.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn longs(cmd: &Command) -> impl Iterator<Item = String> + '_ {
    cmd.get_arguments().flat_map(|a| {
        let mut names: Vec<String> = a.get_long().map(normalize).into_iter().collect();
        names.extend(a.get_all_aliases().unwrap_or_default().into_iter().map(normalize));
        names
    })
}

fn all_longs(cmd: &Command, acc: &mut BTreeSet<String>) {
    acc.extend(longs(cmd));
    for sub in cmd.get_subcommands() {
        all_longs(sub, acc);
    }
}

/// Appends config entries the selected subcommand accepts and the command line lacks.
pub fn merge(argv: Vec<String>, entries: &[(String, String)], root: &Command) -> Result<Vec<String>, ConfigError> {
    let mut known = BTreeSet::new();
    all_longs(root, &mut known);
    if let Some((k, _)) = entries.iter().find(|(k, _)| !known.contains(k)) {
        return Err(ConfigError::UnknownKey(k.clone()));
    }
    let mut leaf = root;
    let mut skip = false;
    for tok in argv.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if tok == "--config" {
            skip = true;
            continue;
        }
        if tok.starts_with("--config=") {
            continue;
        }
        if tok.starts_with('-') {
            break;
        }
        match leaf.find_subcommand(tok) {
            Some(sub) => leaf = sub,
            None => break,
        }
    }
    let given: BTreeSet<String> =
        argv.iter().filter(|t| t.starts_with("--")).map(|t| normalize(t.split('=').next().unwrap_or(t))).collect();
    let mut out = argv;
    for (key, value) in entries {
        let arg = leaf.get_arguments().find(|a| {
            a.get_long().map(normalize).as_deref() == Some(key.as_str())
                || a.get_all_aliases().unwrap_or_default().into_iter().any(|al| normalize(al) == *key)
        });
        let Some(arg) = arg else { continue };
        let long = arg.get_long().expect("matched by long name");
        if given.contains(&normalize(long)) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.to_lowercase().as_str() {
                "true" => out.push(format!("--{long}")),
                "false" => {}
                _ => return Err(ConfigError::Bool { key: key.clone(), value: value.clone() }),
            },
            _ => out.push(format!("--{long}={value}")),
        }
    }
    Ok(out)
}
