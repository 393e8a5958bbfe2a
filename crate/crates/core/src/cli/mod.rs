//! Command-line front end.
//!
//! Every subcommand takes its parameters as `--key EXPR` flags, `--set
//! key=EXPR` pairs or a `[params]` table in a TOML file given with
//! `--config`. Flags override the file, which overrides built-in defaults.
//! Each run writes its tables and a JSON manifest into the output directory;
//! `gtm replay MANIFEST` re-runs a manifest exactly.

pub mod commands;
pub mod config;
pub mod expr;
pub mod output;
pub mod recipes;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Arg, ArgAction, ArgMatches, Command};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::lattice::LatticeError;
use crate::pf::PfError;
use crate::potential::PotentialError;
use crate::resonance::ResonanceError;
use config::{parse_config, parse_pair, ConfigError, ConfigSources, Format, Kind, ParamSpec, RunConfig, OUT_DIR_ENV};
use output::{write_run, Manifest, Output};

pub const TOOL: &str = "gtm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Domain(String),
    /// A numerical budget (band range, FFT grid, integer range) was exceeded.
    #[error("{0}")]
    Budget(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Domain(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<ResonanceError> for CliError {
    fn from(e: ResonanceError) -> Self {
        match e {
            ResonanceError::Overflow => CliError::Budget(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<PfError> for CliError {
    fn from(e: PfError) -> Self {
        match e {
            PfError::Leakage { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::NotConverged { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

type Pipeline = fn(&RunConfig) -> Result<Vec<Output>, CliError>;

struct Subcommand {
    name: &'static str,
    about: &'static str,
    params: &'static [ParamSpec],
    run: Pipeline,
}

const SUBCOMMANDS: &[Subcommand] = &[
    Subcommand {
        name: "potential",
        about: "Sample V and V' on [0, 2pi]",
        params: commands::POTENTIAL,
        run: commands::potential,
    },
    Subcommand {
        name: "simulate",
        about: "Ensemble mean-square momentum against time",
        params: commands::SIMULATE,
        run: commands::simulate,
    },
    Subcommand {
        name: "histogram",
        about: "Momentum distribution over the final kicks",
        params: commands::HISTOGRAM,
        run: commands::histogram,
    },
    Subcommand {
        name: "portrait",
        about: "Orbits on the torus: theta and p mod 2pi",
        params: commands::PORTRAIT,
        run: commands::portrait,
    },
    Subcommand {
        name: "resonance",
        about: "Exact integer cycles at commensurate eta",
        params: commands::RESONANCE,
        run: commands::resonance,
    },
    Subcommand {
        name: "pf",
        about: "Perron-Frobenius evolution on a grid of bands",
        params: commands::PF,
        run: commands::pf,
    },
    Subcommand {
        name: "lattice",
        about: "Lattice coupling tables and on-site phase diagnostics",
        params: commands::LATTICE,
        run: commands::lattice,
    },
];

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn param_args(params: &[ParamSpec]) -> Vec<Arg> {
    params
        .iter()
        .map(|p| {
            let mut help = p.help.to_string();
            match p.kind {
                Kind::Choice(options) => help.push_str(&format!(" [{}]", options.join("|"))),
                Kind::RealOr(options) => help.push_str(&format!(" [EXPR|{}]", options.join("|"))),
                _ => {}
            }
            if let Some(d) = p.default {
                help.push_str(&format!(" (default: {d})"));
            }
            let value_name = match p.kind {
                Kind::Choice(_) => "WORD",
                _ => "EXPR",
            };
            Arg::new(p.key)
                .long(flag_name(p.key))
                .value_name(value_name)
                .allow_hyphen_values(true)
                .help(help)
        })
        .collect()
}

fn set_arg() -> Arg {
    Arg::new("set")
        .long("set")
        .value_name("KEY=EXPR")
        .action(ArgAction::Append)
        .help("Set a parameter; repeatable")
}

pub fn build_cli() -> Command {
    let mut cli = Command::new(TOOL)
        .version(VERSION)
        .about("Generalized triangle maps: ensembles, resonances, Perron-Frobenius evolution and lattice couplings")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .global(true)
                .value_parser(clap::value_parser!(PathBuf))
                .help("TOML file with `command`, `out`, `format` and a [params] table"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .short('o')
                .value_name("DIR")
                .global(true)
                .value_parser(clap::value_parser!(PathBuf))
                .help(format!("Output directory (default: ${OUT_DIR_ENV} or ./{})", config::DEFAULT_OUT_DIR)),
        )
        .arg(
            Arg::new("format")
                .long("format")
                .value_name("FORMAT")
                .global(true)
                .value_parser(["csv", "json"])
                .help("Table format (default: csv)"),
        );
    for sub in SUBCOMMANDS {
        cli = cli.subcommand(Command::new(sub.name).about(sub.about).args(param_args(sub.params)).arg(set_arg()));
    }
    let names: Vec<&str> = recipes::RECIPES.iter().map(|r| r.name).collect();
    let listing: String = recipes::RECIPES
        .iter()
        .map(|r| format!("  {:<16}{}\n", r.name, r.about))
        .collect();
    cli.subcommand(
        Command::new("recipe")
            .about("Reproduce a figure at desk-scale defaults")
            .after_help(format!("Recipes:\n{listing}"))
            .arg(Arg::new("name").required(true).value_parser(names))
            .arg(set_arg()),
    )
    .subcommand(
        Command::new("replay")
            .about("Re-run the command recorded in a manifest")
            .arg(
                Arg::new("manifest")
                    .required(true)
                    .value_parser(clap::value_parser!(PathBuf)),
            ),
    )
}

fn sources(top: &ArgMatches, sub: &ArgMatches, params: &[ParamSpec]) -> Result<ConfigSources, CliError> {
    let mut flags = BTreeMap::new();
    if let Some(pairs) = sub.get_many::<String>("set") {
        for pair in pairs {
            let (k, v) = parse_pair(pair)?;
            flags.insert(k, v);
        }
    }
    for p in params {
        if let Some(v) = sub.try_get_one::<String>(p.key).ok().flatten() {
            flags.insert(p.key.to_string(), v.clone());
        }
    }
    let pick = |name: &str| -> Option<PathBuf> {
        sub.get_one::<PathBuf>(name).or_else(|| top.get_one::<PathBuf>(name)).cloned()
    };
    let format = sub
        .get_one::<String>("format")
        .or_else(|| top.get_one::<String>("format"))
        .map(|f| f.parse::<Format>())
        .transpose()?;
    Ok(ConfigSources {
        file: pick("config"),
        flags,
        out: pick("out"),
        format,
    })
}

/// Runs one pipeline and writes its outputs; returns the written paths.
pub fn execute(
    command: &str,
    recipe: Option<&str>,
    params: &[ParamSpec],
    run: Pipeline,
    sources: &ConfigSources,
) -> Result<Vec<PathBuf>, CliError> {
    let stem = recipe.unwrap_or(command);
    let cfg = parse_config(stem, params, sources)?;
    let started = Instant::now();
    let outputs = run(&cfg)?;
    let mut manifest = Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: command.into(),
        recipe: recipe.map(String::from),
        params: cfg.exprs.clone(),
        values: cfg.values.clone(),
        seed: cfg.values.get("seed").map(|&s| s as u64),
        format: cfg.format,
        outputs: Vec::new(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_run(&cfg.out_dir, stem, &outputs, cfg.format, &mut manifest).map_err(|source| CliError::Io {
        path: cfg.out_dir.clone(),
        source,
    })
}

/// Re-runs a manifest into `out` (or the default output directory).
pub fn replay(manifest: &Path, out: Option<PathBuf>) -> Result<Vec<PathBuf>, CliError> {
    let m = Manifest::load(manifest).map_err(|source| CliError::Io {
        path: manifest.to_path_buf(),
        source,
    })?;
    let sources = ConfigSources {
        file: None,
        flags: m.params.clone(),
        out,
        format: Some(m.format),
    };
    match (m.command.as_str(), m.recipe.as_deref()) {
        ("recipe", Some(name)) => {
            let r = recipes::find(name).ok_or_else(|| CliError::Domain(format!("unknown recipe `{name}`")))?;
            execute("recipe", Some(r.name), r.params, r.run, &sources)
        }
        (command, _) => {
            let sub = SUBCOMMANDS
                .iter()
                .find(|s| s.name == command)
                .ok_or_else(|| CliError::Domain(format!("unknown command `{command}` in manifest")))?;
            execute(sub.name, None, sub.params, sub.run, &sources)
        }
    }
}

fn dispatch(matches: &ArgMatches) -> Result<Vec<PathBuf>, CliError> {
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    match name {
        "recipe" => {
            let recipe = recipes::find(sub.get_one::<String>("name").expect("required")).expect("validated by clap");
            let sources = sources(matches, sub, &[])?;
            execute("recipe", Some(recipe.name), recipe.params, recipe.run, &sources)
        }
        "replay" => {
            let out = sub.get_one::<PathBuf>("out").or_else(|| matches.get_one::<PathBuf>("out")).cloned();
            replay(sub.get_one::<PathBuf>("manifest").expect("required"), out)
        }
        _ => {
            let spec = SUBCOMMANDS.iter().find(|s| s.name == name).expect("registered subcommand");
            let sources = sources(matches, sub, spec.params)?;
            execute(spec.name, None, spec.params, spec.run, &sources)
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match build_cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&matches) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
