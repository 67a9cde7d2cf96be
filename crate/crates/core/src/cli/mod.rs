//! Configuration files, reports and the `linearize` / `solve` / `simulate`
//! / `sweep` workflows.
//!
//! Exit codes: 0 on success (and decouplable for `solve`), 2 when `solve`
//! finds the problem well posed but not decouplable, 1 on any error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod report;

pub use commands::{
    cmd_linearize, cmd_simulate, cmd_solve, cmd_sweep, fmt_f64, write_difference_csv,
    write_matrix_csv, write_sweep_csv, write_trajectory_csv, EquilibriumKind, Feedback,
    SimulateOutput, SweepRow, SweepSpec, SWEEP_MAX_N,
};
pub use config::{EquilibriumSection, RunConfig};
pub use report::Report;

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_DECOUPLABLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chain-ddp", version, about = "Disturbance decoupling for the chain pendulum on a cart")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write A, B, E, H and the state layout as CSV.
    Linearize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide decouplability and synthesize a friend.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.json; the report always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Linear run from rest under the configured disturbance.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        feedback: Feedback,
        #[command(flatten)]
        common: Common,
    },
    /// Solve every (n, equilibrium) pair in a range.
    Sweep {
        /// Optional config whose masses and lengths are truncated to each n.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "hanging,inverted,alternating")]
        equilibria: Vec<EquilibriumKind>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Verification tolerance, overriding the config.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Record wall times (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

fn load(path: &std::path::Path, common: Option<&Common>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(tol) = common.and_then(|c| c.tol) {
        cfg.tol = tol;
        cfg.validate()?;
    }
    Ok(cfg)
}

/// Runs one parsed command, writing results to `stdout`.
pub fn execute<W: Write>(cli: Cli, stdout: &mut W) -> Result<i32> {
    match cli.command {
        Command::Linearize { config, out } => {
            let cfg = load(&config, None)?;
            for path in cmd_linearize(&cfg, &out)? {
                writeln!(stdout, "{}", path.display())?;
            }
            Ok(EXIT_OK)
        }
        Command::Solve {
            config,
            out,
            common,
        } => {
            let cfg = load(&config, Some(&common))?;
            let report = cmd_solve(&cfg, out.as_deref(), common.timing)?;
            writeln!(stdout, "{}", report.to_json()?)?;
            Ok(if report.decouplable {
                EXIT_OK
            } else {
                EXIT_NOT_DECOUPLABLE
            })
        }
        Command::Simulate {
            config,
            out,
            feedback,
            common,
        } => {
            let cfg = load(&config, Some(&common))?;
            let result = cmd_simulate(&cfg, feedback, &out)?;
            for path in &result.files {
                writeln!(stdout, "{}", path.display())?;
            }
            if let Some(d) = &result.difference {
                for (axis, name) in ["x", "y"].iter().enumerate() {
                    writeln!(
                        stdout,
                        "max |difference| {name}: with feedback {}, without {}",
                        fmt_f64(d.max_with(axis)),
                        fmt_f64(d.max_without(axis))
                    )?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            config,
            out,
            n_min,
            n_max,
            equilibria,
            common,
        } => {
            let (params, mut options) = match &config {
                Some(path) => {
                    let cfg = load(path, Some(&common))?;
                    let opts = cfg.ddp_options();
                    (Some(cfg.params), opts)
                }
                None => (None, Default::default()),
            };
            if let Some(tol) = common.tol {
                if !(tol > 0.0 && tol.is_finite()) {
                    return Err(Error::Config(format!("nonpositive tol: {tol}")));
                }
                options.verify_tol = tol;
            }
            let spec = SweepSpec {
                n_min,
                n_max,
                equilibria,
                params,
                options,
                timing: common.timing,
            };
            let rows = cmd_sweep(&spec)?;
            match out {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir)?;
                    }
                    write_sweep_csv(std::fs::File::create(&path)?, &rows, spec.timing)?;
                    writeln!(stdout, "{}", path.display())?;
                }
                None => write_sweep_csv(&mut *stdout, &rows, spec.timing)?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code;
/// diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli, &mut stdout) {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
