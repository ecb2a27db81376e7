//! Key-value config files and seed resolution.
//!
//! A config file holds `key = value` lines mirroring long flags. Lines before
//! any `[section]` apply to every subcommand, lines under `[name]` only to
//! subcommand `name`. `true` turns a switch on, `false` leaves it off, and a
//! repeated key passes the flag repeatedly. Flags given on the command line
//! replace the config entries for the same key.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::hash::{BuildHasher, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{usage, CliError, CliResult};

/// Directory for the default seed (`default_seed`) and the log of generated
/// seeds (`seeds.log`).
pub const SEED_DIR_ENV: &str = "CHAMPAGNE_SEED_DIR";

fn long_name(arg: &str) -> Option<&str> {
    let name = arg.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(n, _)| n))
}

/// Splices the entries of `--config <path>` into the argument list right
/// after the subcommand name.
pub fn expand(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config: Option<PathBuf> = None;
    let mut sub_pos = None;
    let mut i = 1;
    while i < strs.len() {
        let a = &strs[i];
        if a == "--config" {
            if config.is_none() {
                config = strs.get(i + 1).map(PathBuf::from);
            }
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config.get_or_insert_with(|| PathBuf::from(p));
        } else if sub_pos.is_none() && !a.starts_with('-') {
            sub_pos = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config, sub_pos) else {
        return Ok(args);
    };
    let given: HashSet<&str> = strs[pos + 1..].iter().filter_map(|a| long_name(a)).collect();
    let entries = read_config(&path, &strs[pos])?;
    let mut out: Vec<OsString> = args[..=pos].to_vec();
    for (key, value) in entries {
        if given.contains(key.as_str()) {
            continue;
        }
        match value.as_str() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn read_config(path: &Path, subcommand: &str) -> CliResult<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut section: Option<String> = None;
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        if section.as_deref().is_some_and(|s| s != subcommand) {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (line, "true"),
        };
        if key.is_empty() || key == "config" {
            return Err(usage(format!("{}:{}: bad config line `{raw}`", path.display(), n + 1)));
        }
        entries.push((key.replace('_', "-"), value.to_string()));
    }
    Ok(entries)
}

/// The explicit seed, else `$CHAMPAGNE_SEED_DIR/default_seed`, else a fresh
/// seed that is appended to `$CHAMPAGNE_SEED_DIR/seeds.log` when set.
pub fn resolve_seed(explicit: Option<u64>, subcommand: &str) -> CliResult<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    let dir = std::env::var_os(SEED_DIR_ENV).map(PathBuf::from);
    if let Some(dir) = &dir {
        let file = dir.join("default_seed");
        if let Ok(text) = fs::read_to_string(&file) {
            return text
                .trim()
                .parse()
                .map_err(|_| usage(format!("{}: not an unsigned integer", file.display())));
        }
    }
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(now.as_nanos());
    h.write_u32(std::process::id());
    let seed = h.finish();
    if let Some(dir) = dir {
        let io = |source| CliError::Io {
            path: dir.clone(),
            source,
        };
        fs::create_dir_all(&dir).map_err(io)?;
        let mut log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("seeds.log"))
            .map_err(io)?;
        writeln!(log, "{} {subcommand} {seed}", now.as_secs()).map_err(io)?;
    }
    Ok(seed)
}
