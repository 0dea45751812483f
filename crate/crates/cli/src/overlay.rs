//! `--config FILE` support: `key = value` lines become long flags placed
//! right after the subcommand, ahead of the user's own flags. Since every
//! flag may be repeated and the last occurrence wins, command-line flags
//! take precedence over the file.

use std::ffi::OsString;
use std::path::Path;

use crate::CliError;

/// Parse `key = value` lines. Blank lines and `#` comments are skipped;
/// underscores in keys are read as dashes.
pub fn parse_overlay(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key=value, got {raw:?}", no + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: invalid key {:?}", no + 1, k.trim())));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn overlay_flags(pairs: &[(String, String)]) -> Vec<OsString> {
    let mut flags = Vec::new();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => flags.push(format!("--{k}").into()),
            "false" => {}
            _ => flags.push(format!("--{k}={v}").into()),
        }
    }
    flags
}

/// Remove `--config` from `argv` and splice the file's flags in after the
/// subcommand name.
pub fn expand(argv: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path: Option<OsString> = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            rest.push(a);
            rest.extend(it.by_ref());
            break;
        }
        if s == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| CliError::Usage("--config needs a file argument".into()))?,
            );
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let flags = overlay_flags(&parse_overlay(&text)?);
    let at = rest
        .iter()
        .position(|a| subcommands.contains(&a.to_string_lossy().as_ref()))
        .ok_or_else(|| CliError::Usage("--config needs a subcommand".into()))?;
    rest.splice(at + 1..at + 1, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(|s| s.into()).collect()
    }

    #[test]
    fn parses_comments_and_underscores() {
        let p = parse_overlay("# c\n tau_min = 1.3 # trailing\n\noracle=true\n").unwrap();
        assert_eq!(p, vec![("tau-min".into(), "1.3".into()), ("oracle".into(), "true".into())]);
        assert!(parse_overlay("novalue\n").is_err());
    }

    #[test]
    fn flags_follow_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.cfg");
        std::fs::write(&cfg, "tau-min = 2\nverbose = false\n").unwrap();
        let argv = os(&["prog", "certify", "--config", cfg.to_str().unwrap(), "--tau-min", "1.5"]);
        let out = expand(argv, &["certify"]).unwrap();
        assert_eq!(out, os(&["prog", "certify", "--tau-min=2", "--tau-min", "1.5"]));
    }

    #[test]
    fn untouched_without_config() {
        let argv = os(&["prog", "phase", "--fc", "20"]);
        assert_eq!(expand(argv.clone(), &["phase"]).unwrap(), argv);
    }
}
