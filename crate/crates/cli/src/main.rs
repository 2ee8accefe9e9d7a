//! `fopv` command line: run grid-connected PV scenarios, emit time-series
//! CSVs, figure SVGs, the FO/IO comparison report, and acceptance checks.

mod emit;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fopv_core::checks;
use fopv_core::scenario::{Fidelity, Mode, Scenario};
use fopv_core::sim::{run, run_comparison, summarize, SimLog};

#[derive(Parser)]
#[command(name = "fopv", version, about = "Two-stage grid-connected PV simulator with fractional-order controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write outputs.
    Run(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ControllerArg {
    Fo,
    Io,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FidelityArg {
    Averaged,
    Switched,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML path or a builtin name (`paper`, `ideal-stc`).
    #[arg(long, default_value = "paper")]
    scenario: String,
    /// Which controller family to run.
    #[arg(long, value_enum, default_value = "both")]
    controller: ControllerArg,
    /// Override the plant realization.
    #[arg(long, value_enum)]
    fidelity: Option<FidelityArg>,
    /// Override the integration step, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, env = "FOPV_OUT", default_value = "fopv-out")]
    out: PathBuf,
    /// Write per-signal CSV files.
    #[arg(long)]
    csv: bool,
    /// Write figure SVGs.
    #[arg(long)]
    plots: bool,
    /// Write the comparison report.
    #[arg(long)]
    report: bool,
    /// Evaluate the acceptance bands (requires `--controller both`);
    /// the exit code reflects the result.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run_command(&args) {
            Ok(all_checks_passed) => {
                if all_checks_passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}

fn run_command(args: &RunArgs) -> Result<bool> {
    let mut sc = Scenario::load(&args.scenario)
        .with_context(|| format!("loading scenario '{}'", args.scenario))?;
    if let Some(f) = args.fidelity {
        sc.fidelity = match f {
            FidelityArg::Averaged => Fidelity::Averaged,
            FidelityArg::Switched => Fidelity::Switched,
        };
        if sc.fidelity == Fidelity::Switched && sc.dt.is_none() && sc.log_decimation == 10 {
            sc.log_decimation = 100;
        }
    }
    if let Some(dt) = args.dt {
        sc.dt = Some(dt);
    }
    sc.validate()?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    if args.check && args.controller != ControllerArg::Both {
        bail!("--check requires --controller both (the bands compare FO against IO)");
    }

    let mut all_passed = true;
    match args.controller {
        ControllerArg::Both => {
            let cmp = run_comparison::<f64>(&sc)?;
            emit_for(&args, &cmp.fo, "fo")?;
            emit_for(&args, &cmp.io, "io")?;
            if args.report || args.check {
                let text = emit::write_report(&cmp.fo_summaries, Some(&cmp.io_summaries), &args.out)?;
                print!("{text}");
            }
            if args.plots {
                emit::write_plots(&[&cmp.fo, &cmp.io], &args.out)?;
            }
            if args.check {
                let results = checks::evaluate(&cmp);
                all_passed = results.iter().all(|c| c.passed);
                for c in &results {
                    println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.description);
                }
                let json = serde_json::to_string_pretty(&results)?;
                std::fs::write(args.out.join("checks.json"), &json)?;
                if !all_passed {
                    let failures: Vec<_> = results.iter().filter(|c| !c.passed).collect();
                    println!("{}", serde_json::to_string(&failures)?);
                }
            }
        }
        single => {
            let mode = if single == ControllerArg::Fo { Mode::Fo } else { Mode::Io };
            sc.mode = mode;
            let log = run::<f64>(&sc)?;
            let name = if mode == Mode::Fo { "fo" } else { "io" };
            emit_for(&args, &log, name)?;
            if args.report {
                let sums = summarize(&log)?;
                let text = emit::write_report(&sums, None, &args.out)?;
                print!("{text}");
            }
            if args.plots {
                emit::write_plots(&[&log], &args.out)?;
            }
        }
    }
    Ok(all_passed)
}

fn emit_for(args: &RunArgs, log: &SimLog<f64>, name: &str) -> Result<()> {
    if args.csv {
        emit::write_csv(log, &args.out.join(format!("signals_{name}.csv")))?;
    }
    Ok(())
}
