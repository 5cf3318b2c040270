use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xva_pinn_cli::config::{ExperimentConfig, Mode};
use xva_pinn_cli::error::{CliError, Result};
use xva_pinn_cli::io::{self, Table};
use xva_pinn_cli::run::{self, Approx, Reference};
use xva_pinn_cli::Checkpoint;

/// Price options under counterparty risk with physics-informed networks.
///
/// Exit codes: 0 success, 1 invalid input, 2 numeric failure.
#[derive(Parser)]
#[command(name = "xva-pinn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Args)]
struct Overrides {
    /// First training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds; the trial with the lowest final loss is kept.
    #[arg(long)]
    trials: Option<usize>,
    /// Boundary residual construction.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Train networks for every swept seller hazard rate and evaluate them.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Price and Greeks of a trained network at the points of a CSV file.
    Greeks {
        #[arg(long)]
        checkpoint: PathBuf,
        /// CSV with a header and columns `t,axis1[,axis2]`.
        #[arg(long)]
        points: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference reference surfaces.
    Fd {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Error norms and the clamped error map of a network or surface against a reference.
    Compare {
        /// Network under test.
        #[arg(long, conflicts_with = "approx", required_unless_present = "approx")]
        checkpoint: Option<PathBuf>,
        /// Surface under test.
        #[arg(long)]
        approx: Option<PathBuf>,
        /// Reference surface CSV (with its JSON sidecar).
        #[arg(long, conflicts_with = "closed_form", required_unless_present = "closed_form")]
        surface: Option<PathBuf>,
        /// Use the closed-form one-asset price as reference; needs --config.
        #[arg(long, requires = "config")]
        closed_form: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Clamp threshold of the error map.
        #[arg(long, default_value_t = xva_pinn_core::metrics::DEFAULT_CLAMP)]
        clamp: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Closed-form risky Black-Scholes prices and Greeks.
    Price {
        #[arg(long)]
        config: PathBuf,
        /// CSV with a header and columns `t,S`.
        #[arg(long, conflicts_with_all = ["t", "s"])]
        points: Option<PathBuf>,
        /// Time to maturity.
        #[arg(long, requires = "s")]
        t: Option<f64>,
        /// Spot.
        #[arg(long, requires = "t")]
        s: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => table.write(path),
        None => {
            print!("{}", table.to_csv()?);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    let mut log = |m: &str| {
        if !quiet {
            eprintln!("{m}");
        }
    };
    match cli.command {
        Command::Train { config, out, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply_overrides(overrides.seed, overrides.trials, overrides.mode)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let summary = run::run_train(&cfg, &out, &mut log)?;
            for case in &summary.cases {
                let e = &case.evaluation.whole;
                println!(
                    "lambda_b={} best_seed={} log10_rel_l1={:.3} log10_rel_l2={:.3} log10_rel_linf={:.3}",
                    case.lambda_b, case.best_seed, e.log10_l1, e.log10_l2, e.log10_linf
                );
            }
            Ok(())
        }
        Command::Greeks { checkpoint, points, out } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let points = run::read_points(&points)?;
            emit(&run::greeks_table(&ck, &points)?, out.as_deref())
        }
        Command::Fd { config, out, mode } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply_overrides(None, None, mode)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            for case in run::run_fd(&cfg, &out, &mut log)? {
                let mut line = format!(
                    "lambda_b={} rows={} fixed_point_iterations={}",
                    case.lambda_b, case.rows, case.max_fixed_point_iterations
                );
                if let Some(f) = case.feller {
                    line += &format!(" feller={f}");
                }
                if let Some(r) = &case.closed_form {
                    line += &format!(" log10_rel_l2_vs_closed_form={:.3}", r.log10_l2);
                }
                println!("{line}");
            }
            Ok(())
        }
        Command::Compare { checkpoint, approx, surface, closed_form, config, clamp, out } => {
            let cfg = config.as_deref().map(ExperimentConfig::load).transpose()?;
            let approx = match (checkpoint, approx) {
                (Some(path), _) => Approx::Network(Checkpoint::load(&path)?),
                (None, Some(path)) => Approx::Surface(io::read_surface(&path)?.0),
                (None, None) => return Err(CliError::validation("one of --checkpoint or --approx is required")),
            };
            let reference = match (surface, closed_form) {
                (Some(path), _) => Reference::Surface(io::read_surface(&path)?.0),
                (None, true) => {
                    let cfg = cfg.as_ref().ok_or_else(|| CliError::validation("--closed-form needs --config"))?;
                    Reference::ClosedForm(cfg.spec(cfg.model.xva.lambda_b[0])?)
                }
                (None, false) => return Err(CliError::validation("one of --surface or --closed-form is required")),
            };
            if !(clamp > 0.0) {
                return Err(CliError::validation(format!("--clamp must be positive, got {clamp}")));
            }
            let fallback = cfg.as_ref().map(|c| (c, c.evaluation_steps()));
            let report = run::run_compare(&approx, &reference, fallback, clamp, &out)?;
            println!(
                "log10_rel_l1={:.3} log10_rel_l2={:.3} log10_rel_linf={:.3} points={}",
                report.log10_l1, report.log10_l2, report.log10_linf, report.points
            );
            Ok(())
        }
        Command::Price { config, points, t, s, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let points = match (points, t, s) {
                (Some(path), _, _) => run::read_points(&path)?,
                (None, Some(t), Some(s)) => vec![vec![t, s]],
                _ => return Err(CliError::validation("give --points or both --t and --s")),
            };
            emit(&run::price_table(&cfg, &points)?, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are invalid input; clap's own code 2 would read as a numeric failure
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
