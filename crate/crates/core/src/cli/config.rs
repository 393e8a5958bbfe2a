//! Run configuration: parameter tables, TOML files and flag overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{evaluate_all, ExprError};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GTM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "gtm-out";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("unknown parameter `{key}` for `{command}`")]
    UnknownKey { key: String, command: String },
    #[error("missing required parameter `{key}` for `{command}`")]
    MissingKey { key: String, command: String },
    #[error("parameter `{key}` = {value} must be a{} integer", if *signed { "n" } else { " non-negative" })]
    NotInteger { key: String, value: f64, signed: bool },
    #[error("parameter `{key}` = `{value}`; expected one of: {allowed}")]
    InvalidChoice { key: String, value: String, allowed: String },
    #[error("malformed `key=value` pair `{0}`")]
    MalformedPair(String),
    #[error("cannot read {path}: {message}")]
    File { path: String, message: String },
    #[error("config file runs `{file}` but the command line runs `{cli}`")]
    CommandMismatch { file: String, cli: String },
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    /// A non-negative integer; expressions must evaluate to a whole number.
    Integer,
    /// Any whole number.
    Signed,
    /// A word from a fixed list, not an expression.
    Choice(&'static [&'static str]),
    /// An expression, or one of the listed words.
    RealOr(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: Option<&'static str>,
    pub kind: Kind,
    pub help: &'static str,
}

pub const fn real(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, default: Some(default), kind: Kind::Real, help }
}

pub const fn integer(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, default: Some(default), kind: Kind::Integer, help }
}

pub const fn signed(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, default: Some(default), kind: Kind::Signed, help }
}

pub const fn required(key: &'static str, kind: Kind, help: &'static str) -> ParamSpec {
    ParamSpec { key, default: None, kind, help }
}

pub const fn choice(key: &'static str, default: &'static str, options: &'static [&'static str], help: &'static str) -> ParamSpec {
    ParamSpec { key, default: Some(default), kind: Kind::Choice(options), help }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(ConfigError::InvalidChoice {
                key: "format".into(),
                value: other.into(),
                allowed: "csv, json".into(),
            }),
        }
    }
}

/// A file given with `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file_error = |message: String| ConfigError::File {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| file_error(e.to_string()))?;
        toml::from_str(&text).map_err(|e| file_error(e.to_string()))
    }
}

/// Everything a command needs: evaluated parameters plus output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    /// Parameter text as given (expressions or words), defaults included.
    pub exprs: BTreeMap<String, String>,
    pub values: BTreeMap<String, f64>,
    pub words: BTreeMap<String, String>,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn real(&self, key: &str) -> f64 {
        self.values[key]
    }

    pub fn integer(&self, key: &str) -> u64 {
        self.values[key] as u64
    }

    pub fn signed(&self, key: &str) -> i64 {
        self.values[key] as i64
    }

    /// The word of a choice parameter, or of a `RealOr` parameter set to a word.
    pub fn word(&self, key: &str) -> Option<&str> {
        self.words.get(key).map(String::as_str)
    }
}

/// Sources of a configuration, lowest precedence first.
#[derive(Debug, Default, Clone)]
pub struct ConfigSources {
    pub file: Option<PathBuf>,
    pub flags: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

fn toml_text(value: &toml::Value) -> Result<String, String> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(format!("{f:?}")),
        other => Err(format!("unsupported value `{other}`")),
    }
}

/// Splits `key=value`.
pub fn parse_pair(pair: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::MalformedPair(pair.into()))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(ConfigError::MalformedPair(pair.into()));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Merges defaults, file and flags for `command`, then evaluates.
pub fn parse_config(command: &str, specs: &[ParamSpec], sources: &ConfigSources) -> Result<RunConfig, ConfigError> {
    let mut text: BTreeMap<String, String> = specs
        .iter()
        .filter_map(|s| s.default.map(|d| (s.key.to_string(), d.to_string())))
        .collect();
    let mut out_dir = None;
    let mut format = None;
    if let Some(path) = &sources.file {
        let file = FileConfig::load(path)?;
        if let Some(c) = &file.command {
            if c != command {
                return Err(ConfigError::CommandMismatch {
                    file: c.clone(),
                    cli: command.into(),
                });
            }
        }
        for (k, v) in &file.params {
            let v = toml_text(v).map_err(|message| ConfigError::File {
                path: path.display().to_string(),
                message: format!("parameter `{k}`: {message}"),
            })?;
            text.insert(k.clone(), v);
        }
        out_dir = file.out;
        format = file.format;
    }
    for (k, v) in &sources.flags {
        text.insert(k.clone(), v.clone());
    }
    for key in text.keys() {
        if !specs.iter().any(|s| s.key == key) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                command: command.into(),
            });
        }
    }
    let mut exprs = BTreeMap::new();
    let mut words = BTreeMap::new();
    for spec in specs {
        let Some(value) = text.get(spec.key) else {
            return Err(ConfigError::MissingKey {
                key: spec.key.into(),
                command: command.into(),
            });
        };
        match spec.kind {
            Kind::Choice(options) => {
                if !options.contains(&value.as_str()) {
                    return Err(ConfigError::InvalidChoice {
                        key: spec.key.into(),
                        value: value.clone(),
                        allowed: options.join(", "),
                    });
                }
                words.insert(spec.key.to_string(), value.clone());
            }
            Kind::RealOr(options) if options.contains(&value.as_str()) => {
                words.insert(spec.key.to_string(), value.clone());
            }
            _ => {
                exprs.insert(spec.key.to_string(), value.clone());
            }
        }
    }
    let values = evaluate_all(&exprs)?;
    for spec in specs {
        let signed = match spec.kind {
            Kind::Integer => false,
            Kind::Signed => true,
            _ => continue,
        };
        let v = values[spec.key];
        if v.fract() != 0.0 || v.abs() > 9.0e15 || (!signed && v < 0.0) {
            return Err(ConfigError::NotInteger {
                key: spec.key.into(),
                value: v,
                signed,
            });
        }
    }
    let mut all = exprs;
    all.extend(words.clone());
    let out_dir = sources
        .out
        .clone()
        .or(out_dir)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(RunConfig {
        command: command.into(),
        exprs: all,
        values,
        words,
        out_dir,
        format: sources.format.or(format).unwrap_or_default(),
    })
}
