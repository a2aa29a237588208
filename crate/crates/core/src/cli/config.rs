use std::path::Path;

/// Reads a flat `key = value` file into command-line arguments. Blank
/// lines and `#` comments are ignored; `true`/`false` values toggle
/// switches.
pub fn config_args(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config {} line {}: expected key=value", path.display(), i + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        match value.trim() {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            v => {
                args.push(format!("--{key}"));
                args.push(v.to_string());
            }
        }
    }
    Ok(args)
}

/// Splices the arguments from `--config <file>` in front of the explicit
/// ones so that the command line wins. Config arguments go right after
/// the subcommand name, where both global and subcommand flags parse.
pub fn merge_config(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let extra = config_args(Path::new(&path))?;
    let at = rest.iter().position(|a| subcommands.contains(&a.as_str())).map(|i| i + 1).unwrap_or(rest.len().min(1));
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_values_precede_cli_values() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# defaults\nseed = 4\nmax_steps=100\nall-inputs = true\nquiet = false").unwrap();
        let args: Vec<String> = ["anonet", "--config", f.path().to_str().unwrap(), "verify", "--seed", "9"]
            .iter()
            .map(ToString::to_string)
            .collect();
        let merged = merge_config(args, &["run", "verify"]).unwrap();
        assert_eq!(merged, ["anonet", "verify", "--seed", "4", "--max-steps", "100", "--all-inputs", "--seed", "9"]);
    }

    #[test]
    fn malformed_config() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "seed 4").unwrap();
        assert!(config_args(f.path()).is_err());
        assert!(config_args(Path::new("/nonexistent.conf")).is_err());
    }
}
