use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfi_cli::config::SystemKind;
use qfi_cli::error::{CliError, CliResult};
use qfi_cli::report::{csv_string, write_bundle, write_coefficients};
use qfi_cli::scenario::afm_omega;
use qfi_cli::verify::{self, Mutation};
use qfi_cli::{commands, Scenario};

#[derive(Parser)]
#[command(
    name = "qfictl",
    version,
    about = "QFI sweeps, control optimization and oracle checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set control.omega=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory for sweep.csv, report.json and plot.py.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Qubit,
    Chain,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    SignFlip,
}

#[derive(Subcommand)]
enum Command {
    /// QFI against probe time.
    SweepTime(RunArgs),
    /// QFI against chain length, with the fitted scaling exponent.
    SweepN(RunArgs),
    /// Gradient ascent on a restricted control basis.
    Optimize(RunArgs),
    /// Matching frequency for the given drive amplitudes.
    Afm {
        #[arg(long, value_enum, default_value = "qubit")]
        system: SystemArg,
        #[arg(long, value_delimiter = ',', default_value = "10,10,10,10,10")]
        first: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "10,10,10,10,10")]
        second: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
    /// Symbolic algebra and generator cross-checks.
    Verify {
        /// Extra scenarios for the dual-generator check.
        #[arg(long)]
        config: Vec<PathBuf>,
        /// Deliberately break the effective Hamiltonian to show the check fails.
        #[arg(long, value_enum)]
        mutate: Option<MutationArg>,
    },
}

fn emit(report: &qfi_cli::RunReport, out: &Option<PathBuf>) -> CliResult<()> {
    print!("{}", csv_string(&report.records)?);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = report.fitted_exponent {
        eprintln!("fitted exponent: {e:.4}");
    }
    if let Some(dir) = out {
        write_bundle(dir, report)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SweepTime(a) => {
            let (s, canonical) = Scenario::load(&a.config, &a.overrides)?;
            emit(&commands::sweep_time(&s, &canonical)?, &a.out)
        }
        Command::SweepN(a) => {
            let (s, canonical) = Scenario::load(&a.config, &a.overrides)?;
            emit(&commands::sweep_n(&s, &canonical)?, &a.out)
        }
        Command::Optimize(a) => {
            let (s, canonical) = Scenario::load(&a.config, &a.overrides)?;
            let (report, rows) = commands::optimize(&s, &canonical)?;
            if let Some(o) = &report.optimize {
                eprintln!(
                    "baseline {:.6e} -> final {:.6e} (bound {:.6e}), {} iterations, converged: {}",
                    o.baseline_qfi, o.final_qfi, o.unrestricted_bound, o.iterations, o.converged
                );
            }
            emit(&report, &a.out)?;
            if let Some(dir) = &a.out {
                write_coefficients(std::fs::File::create(dir.join("coefficients.csv"))?, &rows)?;
            }
            Ok(())
        }
        Command::Afm {
            system,
            first,
            second,
            delta,
        } => {
            let kind = match system {
                SystemArg::Qubit => SystemKind::Qubit,
                SystemArg::Chain => SystemKind::Chain,
            };
            println!("omega = {:.6}", afm_omega(kind, &first, &second, delta)?);
            Ok(())
        }
        Command::Verify { config, mutate } => {
            let extra = config
                .iter()
                .map(|p| Scenario::load(p, &[]).map(|(s, _)| s))
                .collect::<CliResult<Vec<_>>>()?;
            let mutation = match mutate {
                Some(MutationArg::SignFlip) => Mutation::SignFlip,
                None => Mutation::None,
            };
            let checks = verify::run(mutation, &extra)?;
            print!("{}", verify::table(&checks));
            match checks.iter().filter(|c| !c.pass).count() {
                0 => Ok(()),
                n => Err(CliError::VerifyFailed(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
