//! Key=value config files. CLI flags override config values; a key outside
//! the allowed set is an error, not a warning.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cli::CommonOpts;
use crate::ops::CliError;

/// Environment variable naming a default config file.
pub const CONFIG_ENV_VAR: &str = "GATED_PRICE_CONFIG";

const ALLOWED_KEYS: [&str; 7] = ["mode", "delta", "beta", "gamma", "epsilon", "seed", "out"];

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config file {} line {}: expected key=value, got `{line}`",
                path.display(),
                lineno + 1
            ))
        })?;
        if !ALLOWED_KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "config file {} line {}: unknown key `{key}`",
                path.display(),
                lineno + 1
            )));
        }
        out.insert(key.to_string(), value.to_string());
    }
    Ok(out)
}

/// Common options after merging CLI flags over the config file.
#[derive(Debug, Clone, Default)]
pub struct Resolved {
    pub mode: Option<String>,
    pub delta: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn parse_key<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
    }
}

pub fn resolve(common: &CommonOpts) -> Result<Resolved, CliError> {
    let config_path = common
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from));
    let file = match &config_path {
        Some(path) => load_config_file(path)?,
        None => BTreeMap::new(),
    };
    Ok(Resolved {
        mode: common.mode.clone().or_else(|| file.get("mode").cloned()),
        delta: common.delta.or(parse_key(&file, "delta")?),
        beta: common.beta.or(parse_key(&file, "beta")?),
        gamma: common.gamma.or(parse_key(&file, "gamma")?),
        epsilon: common.epsilon.or(parse_key(&file, "epsilon")?),
        seed: common.seed.or(parse_key(&file, "seed")?),
        out: common.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, body: &str) -> PathBuf {
        let path = std::env::temp_dir().join(format!("pricegate-cfg-{}-{name}", std::process::id()));
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn parses_known_keys() {
        let path = write_temp("ok", "mode=threshold\ndelta=0.2\nepsilon=0.5\nseed=9\n");
        let map = load_config_file(&path).unwrap();
        assert_eq!(map["mode"], "threshold");
        let resolved = resolve(&CommonOpts {
            config: Some(path.clone()),
            delta: Some(0.4), // CLI wins
            ..CommonOpts::default()
        })
        .unwrap();
        assert_eq!(resolved.mode.as_deref(), Some("threshold"));
        assert_eq!(resolved.delta, Some(0.4));
        assert_eq!(resolved.epsilon, Some(0.5));
        assert_eq!(resolved.seed, Some(9));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn unknown_key_is_an_error() {
        let path = write_temp("bad", "mode=percentile\nlearning_rate=0.1\n");
        assert!(matches!(load_config_file(&path), Err(CliError::Usage(_))));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn malformed_line_is_an_error() {
        let path = write_temp("line", "mode percentile\n");
        assert!(matches!(load_config_file(&path), Err(CliError::Usage(_))));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_config_file_is_an_error() {
        let resolved = resolve(&CommonOpts {
            config: Some(PathBuf::from("/nonexistent/pricegate.conf")),
            ..CommonOpts::default()
        });
        assert!(matches!(resolved, Err(CliError::Usage(_))));
    }
}
