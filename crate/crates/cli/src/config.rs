//! Flat `key = value` configuration files.
//!
//! Each key names a long flag (`max_iter` and `max-iter` both mean
//! `--max-iter`). Entries are appended to the command line only when the
//! flag is absent there, so flags always win.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

const SWITCHES: [&str; 1] = ["report"];
const LISTS: [&str; 1] = ["fix"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, found {line:?}", idx + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key {key:?}", idx + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn present(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("{flag}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

/// Strips `--config FILE` from `args` and appends the file's entries.
pub fn merge(mut args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a file");
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path}"))?;
    let mut extra = Vec::new();
    for (key, value) in parse(&text)? {
        if present(&args, &key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" | "yes" | "1" => extra.push(format!("--{key}")),
                "false" | "no" | "0" => {}
                _ => bail!("config key {key}: expected true or false, found {value:?}"),
            }
        } else if LISTS.contains(&key.as_str()) {
            for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                extra.push(format!("--{key}"));
                extra.push(item.to_string());
            }
        } else {
            extra.push(format!("--{key}"));
            extra.push(value);
        }
    }
    args.extend(extra);
    Ok(args)
}
