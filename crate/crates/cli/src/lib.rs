//! `spad-gate` command-line harness: scenario files in, CSV out.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use spad_gate_core::link::{GatePolicy, SweepAxis};

pub mod commands;
pub mod config;
pub mod error;
pub mod preset;

use commands::{
    ber_summary, ber_table, stats_rows, validate_report, validate_rows, write_rows,
    write_scenario_trace, BER_HEADER, STATS_HEADER, VALIDATE_HEADER,
};
use config::{load, GridConfig, Mode, Scenario, ScenarioConfig};
pub use error::CliError;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "SPAD_GATE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "spad-gate",
    version,
    about = "Time-gated SPAD receiver analysis and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON scenario file.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Overrides the seed given in the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// CSV destination; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-pixel count moments over a grid of rates and gate-ON times.
    Stats(Common),
    /// Gaussian BER over a sweep, optionally with simulated BER.
    Ber(Common),
    /// Optimal gate-ON time at each received power.
    OptTg(Common),
    /// Simulated BER over a sweep.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Also dump the photon events of the first point.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Analytic moments against simulation; fails beyond 4 standard errors.
    Validate(Common),
    /// Regenerates the data behind one figure: fig3 to fig10, or all.
    Preset {
        name: String,
        #[arg(long, value_name = "U64", default_value_t = 1)]
        seed: u64,
        /// Output directory.
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
        /// Bits per simulated BER point.
        #[arg(long, default_value_t = 20_000)]
        mc_bits: u64,
        /// Analytic curves only.
        #[arg(long)]
        no_mc: bool,
    },
}

/// Sizes the global thread pool from the value of [`THREADS_VAR`].
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(v) = value else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Threads(v.to_string()))?;
    // Fails only if the pool already exists, e.g. in tests; keep that pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn scenario(common: &Common) -> Result<Scenario, CliError> {
    let cfg: ScenarioConfig = load(&common.config)?;
    let mut s = cfg.resolve()?;
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn grid(common: &Common) -> Result<config::Grid, CliError> {
    let cfg: GridConfig = load(&common.config)?;
    let mut g = cfg.resolve()?;
    if let Some(seed) = common.seed {
        g.seed = seed;
    }
    Ok(g)
}

// CSV goes to `--out` or stdout; the summary goes to stdout when the CSV has
// its own file, to stderr otherwise.
fn emit<R: serde::Serialize>(
    common: &Common,
    header: &[&str],
    rows: &[R],
    summary: &[String],
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let report: &mut dyn Write = match &common.out {
        Some(path) => {
            write_rows(commands::create(path)?, header, rows)?;
            stdout
        }
        None => {
            write_rows(&mut *stdout, header, rows)?;
            stderr
        }
    };
    for line in summary {
        writeln!(report, "{line}")?;
    }
    Ok(())
}

fn run_ber(
    common: &Common,
    mut s: Scenario,
    trace: Option<&PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let table = ber_table(&s)?;
    let mut summary = ber_summary(&table);
    if let Some(path) = trace {
        s.mode = Mode::Mc;
        summary.push(write_scenario_trace(&s, path)?);
    }
    emit(common, &BER_HEADER, &table.rows, &summary, stdout, stderr)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Stats(common) => {
            let rows = stats_rows(&grid(common)?)?;
            let summary = vec![format!("{} points", rows.len())];
            emit(common, &STATS_HEADER, &rows, &summary, stdout, stderr)
        }
        Command::Ber(common) => run_ber(common, scenario(common)?, None, stdout, stderr),
        Command::OptTg(common) => {
            let mut s = scenario(common)?;
            if s.axis == SweepAxis::GateOn {
                return Err(CliError::Config {
                    field: "sweep.axis".into(),
                    message: "opt-tg needs a received_power_nw sweep".into(),
                });
            }
            s.policy = GatePolicy::Optimized(s.search);
            run_ber(common, s, None, stdout, stderr)
        }
        Command::Mc { common, trace } => {
            let mut s = scenario(common)?;
            if s.mode == Mode::Analytic {
                s.mode = Mode::Mc;
            }
            run_ber(common, s, trace.as_ref(), stdout, stderr)
        }
        Command::Validate(common) => {
            let rows = validate_rows(&grid(common)?)?;
            let report = validate_report(&rows);
            emit(common, &VALIDATE_HEADER, &rows, &report, stdout, stderr)?;
            let failed = rows.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::ValidationFailed {
                    failed,
                    total: rows.len(),
                });
            }
            Ok(())
        }
        Command::Preset {
            name,
            seed,
            out,
            mc_bits,
            no_mc,
        } => {
            let opts = preset::PresetOptions {
                seed: *seed,
                mc_bits: (!no_mc).then_some(*mc_bits),
            };
            for line in preset::run(name, out, &opts)? {
                writeln!(stdout, "{line}")?;
            }
            Ok(())
        }
    }
}
