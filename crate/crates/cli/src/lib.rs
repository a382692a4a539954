//! Command-line driver: config parsing, dispatch and output writing.
//!
//! Every subcommand reads an optional JSON config (path, or `-` for stdin),
//! applies `--set key=value` overrides and dedicated flags, validates the
//! result strictly, runs, and writes its files followed by `manifest.json`.
//!
//! Exit codes: 0 success, 1 configuration (or I/O) error, 2 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bogolyubov;
pub mod compare;
pub mod config;
pub mod evolve;
pub mod geometry_check;
pub mod output;
pub mod waveguide;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{ConfigError, KeySpec, Reader};
use curved_dirac::ode::OdeError;
use curved_dirac::{BogolyubovError, DiracError, GeometryError, IoError, WaveguideError};
use serde_json::Value;
use std::ffi::OsString;
use std::io::Read;
use std::path::PathBuf;

/// A run completed but a conservation law or oracle check failed.
#[derive(Debug, thiserror::Error)]
#[error("numerical failure: {0}")]
pub struct NumericalFailure(pub String);

#[derive(Parser, Debug)]
#[command(
    name = "curved-dirac",
    version,
    about = "Dirac wave packets in 1+1D curved spacetime and on waveguide arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config file ('-' reads stdin); keys are listed below
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set profile.depth=0.3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Seed for randomized probe points
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check Christoffel symbols, vielbein, spin connection and Ricci scalar against closed forms
    #[command(name = "geometry-check", after_help = config::help(&geometry_check::schema()))]
    GeometryCheck {
        #[command(flatten)]
        common: Common,
        /// Metric family name
        #[arg(long)]
        metric: Option<String>,
        /// Metric parameters as a JSON object
        #[arg(long)]
        params: Option<String>,
        /// Number of random probe points
        #[arg(long)]
        points: Option<u64>,
    },
    /// Evolve a packet in flat spacetime with the exact spectral propagator
    #[command(name = "flat-evolve", after_help = config::help(&evolve::flat_schema()))]
    FlatEvolve {
        #[command(flatten)]
        common: Common,
        /// Also write density.pgm
        #[arg(long)]
        pgm: bool,
    },
    /// Evolve a packet under a time-dependent conformal factor (FRW effective mass)
    #[command(name = "frw-evolve", after_help = config::help(&evolve::frw_schema()))]
    FrwEvolve {
        #[command(flatten)]
        common: Common,
        /// Also write density.pgm
        #[arg(long)]
        pgm: bool,
    },
    /// Bogolyubov coefficients of the scalar mode equation over a k grid
    #[command(after_help = config::help(&bogolyubov::schema()))]
    Bogolyubov {
        #[command(flatten)]
        common: Common,
        /// squarehat or gaussian
        #[arg(long)]
        profile: Option<String>,
        /// Mass
        #[arg(long)]
        m: Option<f64>,
        /// Square-hat duration
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        kmin: Option<f64>,
        #[arg(long)]
        kmax: Option<f64>,
        #[arg(long)]
        nk: Option<u64>,
    },
    /// Propagate a binary waveguide array (z plays the role of t)
    #[command(name = "waveguide-evolve", after_help = config::help(&waveguide::schema()))]
    WaveguideEvolve {
        #[command(flatten)]
        common: Common,
    },
    /// Overlay two observable series (e.g. continuum vs lattice mean position)
    #[command(after_help = config::help(&compare::schema()))]
    Compare {
        #[command(flatten)]
        common: Common,
        /// First CSV file
        #[arg(long)]
        a: Option<PathBuf>,
        /// Second CSV file
        #[arg(long)]
        b: Option<PathBuf>,
        /// Packet width for the relative deviation
        #[arg(long)]
        width: Option<f64>,
    },
}

/// Parsed config plus overrides, ready for a subcommand's schema.
pub struct Input {
    raw: Option<Value>,
    overrides: Vec<(String, Value)>,
}

impl Input {
    pub fn reader(&self, schema: &[KeySpec]) -> Reader {
        Reader::new(schema, self.raw.clone(), &self.overrides)
    }
}

fn load(common: &Common, flags: Vec<(&str, Option<Value>)>) -> Result<Input> {
    let mut errors = Vec::new();
    let raw = match &common.config {
        None => None,
        Some(p) => {
            let text = if p.as_os_str() == "-" {
                let mut s = String::new();
                std::io::stdin()
                    .read_to_string(&mut s)
                    .context("reading config from stdin")?;
                s
            } else {
                std::fs::read_to_string(p).map_err(|e| {
                    ConfigError(vec![format!("cannot read config {}: {e}", p.display())])
                })?
            };
            match serde_json::from_str(&text) {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(format!("config is not valid JSON: {e}"));
                    None
                }
            }
        }
    };
    let mut overrides = Vec::new();
    for s in &common.set {
        match config::parse_set(s) {
            Ok(kv) => overrides.push(kv),
            Err(e) => errors.push(e),
        }
    }
    if let Some(o) = &common.outdir {
        overrides.push(("outdir".into(), Value::String(o.display().to_string())));
    }
    if let Some(s) = common.seed {
        overrides.push(("seed".into(), s.into()));
    }
    for (k, v) in flags {
        if let Some(v) = v {
            overrides.push((k.to_string(), v));
        }
    }
    if !errors.is_empty() {
        return Err(ConfigError(errors).into());
    }
    Ok(Input { raw, overrides })
}

fn num(v: Option<f64>) -> Option<Value> {
    v.map(Value::from)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GeometryCheck {
            common,
            metric,
            params,
            points,
        } => {
            let params =
                match params {
                    None => None,
                    Some(p) => Some(serde_json::from_str(&p).map_err(|e| {
                        ConfigError(vec![format!("--params is not valid JSON: {e}")])
                    })?),
                };
            let input = load(
                &common,
                vec![
                    ("metric", metric.map(Value::String)),
                    ("params", params),
                    ("points", points.map(Value::from)),
                ],
            )?;
            geometry_check::run(&input)
        }
        Command::FlatEvolve { common, pgm } => {
            let input = load(&common, vec![("pgm", pgm.then_some(Value::Bool(true)))])?;
            evolve::run(&input, false)
        }
        Command::FrwEvolve { common, pgm } => {
            let input = load(&common, vec![("pgm", pgm.then_some(Value::Bool(true)))])?;
            evolve::run(&input, true)
        }
        Command::Bogolyubov {
            common,
            profile,
            m,
            t0,
            kmin,
            kmax,
            nk,
        } => {
            let input = load(
                &common,
                vec![
                    ("profile", profile.map(Value::String)),
                    ("m", num(m)),
                    ("t0", num(t0)),
                    ("kmin", num(kmin)),
                    ("kmax", num(kmax)),
                    ("nk", nk.map(Value::from)),
                ],
            )?;
            bogolyubov::run(&input)
        }
        Command::WaveguideEvolve { common } => waveguide::run(&load(&common, vec![])?),
        Command::Compare {
            common,
            a,
            b,
            width,
        } => {
            let path = |p: Option<PathBuf>| p.map(|p| Value::String(p.display().to_string()));
            let input = load(
                &common,
                vec![
                    ("a.path", path(a)),
                    ("b.path", path(b)),
                    ("width", num(width)),
                ],
            )?;
            compare::run(&input)
        }
    }
}

/// Map an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<IoError>() || cause.is::<std::io::Error>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<DiracError>() {
            return match e {
                DiracError::InvalidGrid(_)
                | DiracError::InvalidParameter(_)
                | DiracError::DomainTooSmall { .. }
                | DiracError::ShortSeries { .. } => 1,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<WaveguideError>() {
            return match e {
                WaveguideError::InvalidParameter(_) | WaveguideError::Malformed(_) => 1,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<BogolyubovError>() {
            return match e {
                BogolyubovError::InvalidParameter(_)
                | BogolyubovError::NotAsymptoticallyFlat { .. } => 1,
                _ => 2,
            };
        }
        if cause.is::<GeometryError>() || cause.is::<OdeError>() || cause.is::<NumericalFailure>() {
            return 2;
        }
    }
    1
}

/// Run the command line `argv` (including the program name); returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
