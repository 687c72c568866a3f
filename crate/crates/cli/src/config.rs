//! Flat `key = value` config files merged underneath command-line flags.

use std::path::Path;

use clap::Command;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parses `text` into `--key value` tokens, rejecting keys that are not
/// long flags of `cmd`.
pub fn config_tokens(text: &str, cmd: &Command) -> Result<Vec<String>, ConfigError> {
    let known: Vec<&str> = cmd.get_arguments().filter_map(|a| a.get_long()).collect();
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!("line {}: expected key = value", no + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" || !known.contains(&key.as_str()) {
            return Err(ConfigError(format!("line {}: unknown key {key:?}", no + 1)));
        }
        if value.is_empty() {
            return Err(ConfigError(format!("line {}: empty value for {key:?}", no + 1)));
        }
        out.push(format!("--{key}"));
        out.push(value.to_string());
    }
    Ok(out)
}

/// Finds `--config PATH` or `--config=PATH` after the subcommand.
pub fn find_config(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Rebuilds argv with file values placed before the explicit flags, so
/// that the flags win.
pub fn merge_args(args: Vec<String>, root: &Command) -> Result<Vec<String>, ConfigError> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    // args[0] is the binary, args[1] the subcommand
    let Some(sub) = args.get(1).and_then(|s| root.find_subcommand(s)) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| ConfigError(format!("cannot read config {path}: {e}")))?;
    let tokens = config_tokens(&text, sub)?;
    let explicit: Vec<&str> = args[2..]
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let mut merged = args[..2].to_vec();
    // list-valued flags append, so drop file keys given explicitly
    for pair in tokens.chunks(2) {
        if !explicit.contains(&&pair[0][2..]) {
            merged.extend_from_slice(pair);
        }
    }
    merged.extend_from_slice(&args[2..]);
    Ok(merged)
}
