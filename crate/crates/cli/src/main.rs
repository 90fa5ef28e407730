//! `csl`: decoherence rates, perception bounds and trajectory checks for CSL
//! collapse models. Every artifact embeds the resolved configuration, the seed
//! and the tool version; `csl replay ARTIFACT` re-runs it.

mod commands;
mod config;
mod failure;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use commands::scan::GridFlags;
use commands::scenario::CriterionFlags;
use commands::{medium, rate, scan, scenario, simulate, Resolved};
use config::parse_list;
use failure::Failure;
use output::{emit, sibling, Format, Provenance};

/// Parsed as one comma-separated value rather than repeated flags.
type Floats = Vec<f64>;

#[derive(Parser, Debug)]
#[command(name = "csl", version, about = "CSL collapse-rate calculator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Master seed; overrides any seed in the input file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct Criterion {
    /// Photons absorbed per perception event.
    #[arg(long)]
    photons: Option<u32>,
    /// `Gamma t` counted as collapsed.
    #[arg(long)]
    threshold: Option<f64>,
    /// Perception time in seconds.
    #[arg(long)]
    perception_time: Option<f64>,
    /// Decades of slack either side of the bound.
    #[arg(long)]
    slack: Option<u32>,
}

impl From<Criterion> for CriterionFlags {
    fn from(c: Criterion) -> Self {
        CriterionFlags {
            photons: c.photons,
            threshold: c.threshold,
            perception_time: c.perception_time,
            slack: c.slack,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Off-diagonal decay rate of a two-branch superposition.
    Rate {
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Collapse-rate sum and lambda bound for a perception scenario.
    Scenario {
        /// Built-in scenario name.
        name: Option<String>,
        /// Scenario file instead of a built-in name.
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[command(flatten)]
        criterion: Criterion,
        /// Append the vacuum/corrected/quoted comparison table.
        #[arg(long)]
        compare: bool,
    },
    /// Trajectory ensemble of the stochastic collapse equation.
    Simulate {
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Lattice medium scenario: rates and branch particle tables.
    Medium {
        #[arg(long, short)]
        input: PathBuf,
        /// Also write PREFIX.a.txt and PREFIX.b.txt particle tables.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Collapse verdicts over a lambda x r_C grid.
    Scan {
        #[arg(long, default_value = "most_likely", conflicts_with = "input")]
        scenario: Option<String>,
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1e-6)]
        lambda_max: f64,
        #[arg(long, default_value_t = 41)]
        lambda_count: usize,
        /// Comma-separated r_C values in cm.
        #[arg(long, default_value = "1e-5", value_parser = parse_list)]
        r_c: Floats,
        #[command(flatten)]
        criterion: Criterion,
    },
    /// Re-run an artifact from its embedded configuration.
    Replay {
        artifact: PathBuf,
    },
}

fn resolve(command: Command, seed: Option<u64>) -> Result<Resolved, Failure> {
    Ok(match command {
        Command::Rate { input } => Resolved::Rate(rate::resolve(&input)?),
        Command::Scenario {
            name,
            input,
            criterion,
            compare,
        } => Resolved::Scenario(scenario::resolve(
            name.as_deref(),
            input.as_deref(),
            &criterion.into(),
            compare,
        )?),
        Command::Simulate { input } => Resolved::Simulate(simulate::resolve(&input, seed)?),
        Command::Medium { input, .. } => Resolved::Medium(medium::resolve(&input, seed)?),
        Command::Scan {
            scenario,
            input,
            lambda_min,
            lambda_max,
            lambda_count,
            r_c,
            criterion,
        } => {
            let name = if input.is_some() { None } else { scenario };
            Resolved::Scan(scan::resolve(
                name.as_deref(),
                input.as_deref(),
                &criterion.into(),
                &GridFlags {
                    lambda_min,
                    lambda_max,
                    lambda_count,
                    r_c,
                },
            )?)
        }
        Command::Replay { .. } => unreachable!("handled before resolution"),
    })
}

fn init_pool(workers: usize) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .context("starting worker pool")
        .map_err(Failure::Io)
}

fn write_tables(prefix: &Path, tables: &[String; 2]) -> Result<(), Failure> {
    emit(Some(&sibling(prefix, ".a.txt")), &tables[0])?;
    emit(Some(&sibling(prefix, ".b.txt")), &tables[1])
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let common = cli.common;
    if let Command::Replay { artifact } = &cli.command {
        let text = std::fs::read_to_string(artifact)
            .with_context(|| format!("reading {}", artifact.display()))
            .map_err(Failure::Io)?;
        let prov = Provenance::extract(&text)?;
        if prov.version != env!("CARGO_PKG_VERSION") {
            eprintln!(
                "warning: artifact written by version {}, replaying with {}",
                prov.version,
                env!("CARGO_PKG_VERSION")
            );
        }
        init_pool(prov.workers.max(1))?;
        let resolved = Resolved::from_provenance(&prov)?;
        let out = resolved.run(&prov)?;
        return emit(common.output.as_deref(), &out.text);
    }

    let workers = common
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Failure::parse("--workers must be at least 1"));
    }
    init_pool(workers)?;
    let tables = match &cli.command {
        Command::Medium { tables, .. } => tables.clone(),
        _ => None,
    };
    let resolved = resolve(cli.command, common.seed)?;
    let seed = resolved.own_seed().or(common.seed).unwrap_or(0);
    let prov = resolved.provenance(seed, workers, common.format);
    let out = resolved.run(&prov)?;
    if let (Some(prefix), Some(t)) = (tables, &out.tables) {
        write_tables(&prefix, t)?;
    }
    emit(common.output.as_deref(), &out.text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
