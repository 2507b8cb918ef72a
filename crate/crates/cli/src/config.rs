//! `key = value` run configuration merged underneath the command line.
//!
//! Keys are long flag names (dashes or underscores). A key that belongs to
//! the invoked subcommand, or to the global flags, becomes `--key value`
//! unless the user already passed that flag; keys of other subcommands are
//! ignored, unknown keys are rejected.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Arg, Command};

/// Error in the run configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{}: {}", p.display(), self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parses `key = value` lines; `#` starts a comment, values may be quoted.
pub fn parse(text: &str, path: Option<&Path>) -> Result<Vec<Entry>, ConfigError> {
    let err = |line: usize, msg: String| ConfigError {
        path: path.map(Path::to_path_buf),
        message: format!("line {line}: {msg}"),
    };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got {body:?}")))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(err(line, "empty key".into()));
        }
        let v = v.trim();
        let value = v
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(v)
            .to_string();
        if out.iter().any(|e: &Entry| e.key == key) {
            return Err(err(line, format!("duplicate key {key:?}")));
        }
        out.push(Entry { key, value, line });
    }
    Ok(out)
}

fn find<'a>(cmd: &'a Command, key: &str) -> Option<&'a Arg> {
    cmd.get_arguments().find(|a| a.get_long() == Some(key))
}

fn given(user: &[String], arg: &Arg) -> bool {
    let long = arg.get_long().map(|l| format!("--{l}"));
    let short = arg.get_short().map(|s| format!("-{s}"));
    user.iter().any(|t| {
        long.as_ref()
            .is_some_and(|l| t == l || t.starts_with(&format!("{l}=")))
            || short.as_ref().is_some_and(|s| t.starts_with(s.as_str()))
    })
}

fn as_flag(arg: &Arg, e: &Entry, path: &Path) -> Result<Vec<String>, ConfigError> {
    let long = format!("--{}", e.key);
    if arg.get_action().takes_values() {
        return Ok(vec![long, e.value.clone()]);
    }
    match e.value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(vec![long]),
        "false" | "no" | "0" => Ok(vec![]),
        other => Err(ConfigError {
            path: Some(path.to_path_buf()),
            message: format!(
                "line {}: {} expects true or false, got {other:?}",
                e.line, e.key
            ),
        }),
    }
}

/// Index of the subcommand token in `args` (program name at 0).
fn subcommand_position(cmd: &Command, args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let t = &args[i];
        if let Some(name) = t.strip_prefix("--") {
            let takes = find(cmd, name).is_some_and(|a| a.get_action().takes_values());
            i += if takes && !name.contains('=') { 2 } else { 1 };
            continue;
        }
        if t.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd.find_subcommand(t).map(|_| i);
    }
    None
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(t) = it.next() {
        if t == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = t.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Returns the argument vector with configuration entries spliced in.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let args: Vec<String> = args
        .into_iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let Some(path) = config_path(&args) else {
        return Ok(args.into_iter().map(OsString::from).collect());
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: Some(path.to_path_buf()),
        message: e.to_string(),
    })?;
    let entries = parse(&text, Some(path))?;
    let Some(pos) = subcommand_position(cmd, &args) else {
        return Ok(args.into_iter().map(OsString::from).collect());
    };
    let sub = cmd
        .find_subcommand(&args[pos])
        .expect("position points at a subcommand");
    let (head, tail) = args.split_at(pos + 1);
    let mut global = Vec::new();
    let mut local = Vec::new();
    for e in &entries {
        if e.key == "config" {
            return Err(ConfigError {
                path: Some(path.to_path_buf()),
                message: format!(
                    "line {}: config files cannot include other config files",
                    e.line
                ),
            });
        }
        if let Some(arg) = find(cmd, &e.key).filter(|a| a.is_global_set()) {
            if !given(&args, arg) {
                global.extend(as_flag(arg, e, path)?);
            }
        } else if let Some(arg) = find(sub, &e.key) {
            if !given(tail, arg) {
                local.extend(as_flag(arg, e, path)?);
            }
        } else if cmd.get_subcommands().any(|s| find(s, &e.key).is_some()) {
            log::debug!("config key {} does not apply to {}", e.key, sub.get_name());
        } else {
            return Err(ConfigError {
                path: Some(path.to_path_buf()),
                message: format!("line {}: unknown key {:?}", e.line, e.key),
            });
        }
    }
    let mut out: Vec<String> = vec![head[0].clone()];
    out.extend(global);
    out.extend(head[1..].iter().cloned());
    out.extend(local);
    out.extend(tail.iter().cloned());
    Ok(out.into_iter().map(OsString::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_quotes_and_underscores() {
        let e = parse("# run\nseed = 7\nnoise_dir = \"a b\" # trailing\n\n", None).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "seed");
        assert_eq!(e[1].key, "noise-dir");
        assert_eq!(e[1].value, "a b");
        assert!(parse("seed 7", None).is_err());
        assert!(parse("seed = 1\nseed = 2", None).is_err());
    }
}
