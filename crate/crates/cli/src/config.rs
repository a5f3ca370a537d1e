//! `key=value` config files merged underneath command-line flags.

use std::fs;

/// Pulls `--config FILE` (or `--config=FILE`) out of `args` and splices the
/// file's entries in as flags right after the subcommand path, so that any
/// flag given explicitly later on the command line wins.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("reading {path}: {e}"))?;
    let flags = parse(&text)?;
    // binary name plus the two subcommand tokens
    let at = rest.iter().skip(1).take(2).take_while(|a| !a.starts_with('-')).count() + 1;
    let at = at.min(rest.len());
    rest.splice(at..at, flags);
    Ok(rest)
}

/// Turns `key = value` lines into `--key value` tokens. Blank lines and
/// `#` comments are skipped; `true`/`false` values toggle bare switches.
pub fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let (k, v) = (k.trim().trim_start_matches("--"), v.trim());
        if k.is_empty() {
            return Err(format!("config line {}: empty key", n + 1));
        }
        match v {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}
