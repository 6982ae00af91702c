//! The `numprobe` pipeline: ingest a dataset dump, generate perturbation
//! probes, review them, run models and report robustness.

pub mod commands;
pub mod config;
pub mod error;
pub mod meta;

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Originals, ReportArgs, ReviewArgs, RunArgs};
use crate::config::{parse_list, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "numprobe", version, about = "Numerical perturbation probes for claim verification models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(short, long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated operators, e.g. num,mask.
    #[arg(long, global = true)]
    pub types: Option<String>,
    /// Comma-separated modes: preserve, flip.
    #[arg(long, global = true)]
    pub modes: Option<String>,
    /// strict or lenient.
    #[arg(long, global = true)]
    pub review_mode: Option<String>,
    /// -v for debug, -vv for trace.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a dataset dump into the canonical corpus.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate probes and the label-transition counts.
    Perturb {
        /// Canonical corpus (default: <output_dir>/corpus.jsonl).
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Serve the review queue, or write an export with --export.
    ReviewServe {
        #[arg(long)]
        probes: Option<PathBuf>,
        /// Decision log (default: <output_dir>/decisions.jsonl).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        addr: Option<String>,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// Write the reviewed set under --review-mode here and exit.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Classify original claims and probes with each model.
    Run {
        /// Model label from the config, or mock-oracle. Repeatable.
        #[arg(long = "model")]
        models: Vec<String>,
        /// Comma-separated regimes: zero-shot, two-shot, pap.
        #[arg(long)]
        regimes: Option<String>,
        #[arg(long)]
        probes: Option<PathBuf>,
        /// Output ledger (default: <output_dir>/ledger.jsonl).
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long)]
        max_in_flight: Option<usize>,
        /// Only the unperturbed claims.
        #[arg(long, conflicts_with = "no_originals")]
        originals_only: bool,
        /// Only the probes.
        #[arg(long)]
        no_originals: bool,
    },
    /// Accuracy, invalid-output and token tables from run ledgers.
    Report {
        /// Repeatable (default: <output_dir>/ledger.jsonl).
        #[arg(long = "ledger")]
        ledgers: Vec<PathBuf>,
        /// Combine ledgers produced under different configurations.
        #[arg(long)]
        force: bool,
    },
}

/// Config file, then flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &g.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = &g.types {
        cfg.ptypes = parse_list(t)?;
    }
    if let Some(m) = &g.modes {
        cfg.modes = parse_list(m)?;
    }
    if let Some(m) = &g.review_mode {
        cfg.review.mode = m.parse().map_err(CliError::Config)?;
    }
    if let Command::Run {
        regimes,
        max_in_flight,
        ..
    } = &cli.command
    {
        if let Some(r) = regimes {
            cfg.regimes = parse_list(r)?;
        }
        if max_in_flight.is_some() {
            cfg.max_in_flight = *max_in_flight;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Ingest { input } => commands::ingest(&cfg, input.as_deref(), out),
        Command::Perturb { corpus } => commands::perturb(&cfg, corpus.as_deref(), out),
        Command::ReviewServe {
            probes,
            log,
            addr,
            ui_dir,
            export,
        } => {
            let args = ReviewArgs {
                probes: probes.clone(),
                log: log.clone(),
                addr: addr.clone(),
                ui_dir: ui_dir.clone(),
                export: export.clone(),
            };
            commands::review_serve(&cfg, &args, out)
        }
        Command::Run {
            models,
            probes,
            ledger,
            originals_only,
            no_originals,
            ..
        } => {
            let originals = match (originals_only, no_originals) {
                (true, _) => Originals::Only,
                (_, true) => Originals::Skip,
                _ => Originals::Include,
            };
            let args = RunArgs {
                models: models.clone(),
                probes: probes.clone(),
                ledger: ledger.clone(),
                originals,
            };
            commands::run(&cfg, &args, out)
        }
        Command::Report { ledgers, force } => {
            let args = ReportArgs {
                ledgers: ledgers.clone(),
                force: *force,
            };
            commands::report(&cfg, &args, out)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::INFO,
        1 => tracing::Level::DEBUG,
        _ => tracing::Level::TRACE,
    };
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false)
        .try_init();
}

/// Parse `args`, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.global.verbose);
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
