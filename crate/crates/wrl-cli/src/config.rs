//! Layered configuration: command-line flags override config-file values,
//! which override environment variables, which override built-in defaults.
//! The config file is TOML with one table per subcommand plus `[global]`.

use std::path::{Path, PathBuf};

use crate::errors::CliError;

pub struct Layers<'a> {
    section: Option<&'a toml::Table>,
}

impl<'a> Layers<'a> {
    pub fn new(file: Option<&'a toml::Table>, section_name: &str) -> Layers<'a> {
        let section = file
            .and_then(|t| t.get(section_name))
            .and_then(|v| v.as_table());
        Layers { section }
    }

    fn raw(&self, key: &str) -> Option<&toml::Value> {
        self.section.and_then(|t| t.get(key))
    }

    pub fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> f64 {
        flag.or_else(|| self.raw(key).and_then(as_f64)).unwrap_or(default)
    }

    pub fn opt_f64(&self, key: &str, flag: Option<f64>) -> Option<f64> {
        flag.or_else(|| self.raw(key).and_then(as_f64))
    }

    pub fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> usize {
        flag.or_else(|| self.raw(key).and_then(as_usize)).unwrap_or(default)
    }

    pub fn opt_usize(&self, key: &str, flag: Option<usize>) -> Option<usize> {
        flag.or_else(|| self.raw(key).and_then(as_usize))
    }

    pub fn u64(&self, key: &str, flag: Option<u64>, default: u64) -> u64 {
        flag.or_else(|| self.raw(key).and_then(as_u64)).unwrap_or(default)
    }

    /// A boolean switch: a set flag wins, else the file value, else false.
    pub fn switch(&self, key: &str, flag: bool) -> bool {
        if flag {
            true
        } else {
            self.raw(key).and_then(|v| v.as_bool()).unwrap_or(false)
        }
    }

    pub fn opt_string(&self, key: &str, flag: Option<&str>) -> Option<String> {
        flag.map(str::to_string)
            .or_else(|| self.raw(key).and_then(|v| v.as_str().map(str::to_string)))
    }

    pub fn opt_path(&self, key: &str, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.raw(key).and_then(|v| v.as_str().map(PathBuf::from)))
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_usize(v: &toml::Value) -> Option<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok())
}

fn as_u64(v: &toml::Value) -> Option<u64> {
    v.as_integer().and_then(|i| u64::try_from(i).ok())
}

pub fn load_config_file(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Config(format!("config {} is not valid TOML: {e}", path.display())))
}

/// Parses a sweep expression `lo:hi:count` into a logarithmically spaced
/// grid (count >= 2, endpoints included).
pub fn parse_log_sweep(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "sweep must be lo:hi:count, got {text:?}"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("bad sweep bound {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("bad sweep bound {:?}", parts[1])))?;
    let k: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("bad sweep count {:?}", parts[2])))?;
    if !(lo > 0.0) || !(hi > lo) || k < 2 {
        return Err(CliError::Config(format!(
            "sweep needs 0 < lo < hi and count >= 2, got {text:?}"
        )));
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    Ok((0..k)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (k - 1) as f64).exp())
        .collect())
}

/// Parses a comma-separated list of floats.
pub fn parse_float_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number {:?} in list", s.trim())))
        })
        .collect()
}
