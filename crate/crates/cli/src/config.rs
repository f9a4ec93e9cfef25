//! Merging of `--config` JSON files into the argument list.

use std::ffi::OsString;

use serde_json::Value;

use crate::error::{CliResult, Failure};

fn scalar(v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Failure::usage(format!("unsupported config value {other}"))),
    }
}

/// Flags encoded by a config object: `{"k": 4, "with_joining": true}` becomes
/// `--k 4 --with-joining`. Arrays repeat the flag.
pub fn config_flags(config: &Value) -> CliResult<Vec<String>> {
    let obj = config
        .as_object()
        .ok_or_else(|| Failure::usage("config file must hold a JSON object"))?;
    let mut out = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    out.push(flag.clone());
                    out.push(scalar(item)?);
                }
            }
            v => {
                out.push(flag);
                out.push(scalar(v)?);
            }
        }
    }
    Ok(out)
}

/// Expands `--config FILE` (or `--config=FILE`). Flags from the file are
/// placed right after the subcommand, so explicit flags take precedence.
pub fn expand_config(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy().into_owned();
        if s == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| Failure::usage("--config needs a file"))?
                    .to_string_lossy()
                    .into_owned(),
            );
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::usage(format!("cannot read config {path}: {e}")))?;
    let flags = config_flags(&serde_json::from_str(&text)?)?;
    // Insert right after the subcommand, skipping values of global flags.
    let mut sub = rest.len();
    let mut i = 1;
    while i < rest.len() {
        let a = rest[i].to_string_lossy();
        if a == "--seed" || a == "--format" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            sub = i + 1;
            break;
        }
    }
    let mut out: Vec<OsString> = rest[..sub].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend_from_slice(&rest[sub..]);
    Ok(out)
}
