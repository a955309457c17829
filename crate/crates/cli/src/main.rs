use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pxlap_cli::reproduce::{cmd_reproduce, Example, ReproduceOptions};
use pxlap_cli::suites::{cmd_verify, Suite, VerifyOptions};
use pxlap_cli::{cmd_norm, ensure_dir, exit, record, write_json, CliError};

#[derive(Parser)]
#[command(name = "pxlap", version, about = "Variable-exponent Dirichlet solves and modular checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Dirichlet problem described by a JSON config.
    Solve {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a randomized verification suite.
    Verify {
        /// clarkson | ucstar | lemmas | gradientcheck | monotonicity
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Samples per check (suite-specific default).
        #[arg(long)]
        n: Option<usize>,
        /// Separation levels for ucstar.
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5])]
        eps: Vec<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Recompute one of the explicit constructions.
    Reproduce {
        /// remark | v0-example | pimpliesq
        example: Example,
        #[arg(long, default_value_t = 3)]
        k: u64,
        #[arg(long, default_value_t = 12)]
        smax: u64,
        #[arg(long, default_value_t = 200)]
        jmax: u64,
        /// Nodes per piece.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the Luxemburg norm of a field described by a JSON config.
    Norm { config: PathBuf },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Solve { config, out } => {
            let o = record::cmd_solve(&config, out.as_deref())?;
            let r = &o.record.payload.report;
            println!(
                "{:?} after {} iterations: energy {:e}, gradient {:e}; wrote {}",
                r.termination,
                r.iterations,
                r.final_energy,
                r.final_grad_norm,
                o.dir.display()
            );
            Ok(o.code)
        }
        Command::Verify { suite, seed, n, eps, out } => {
            let report = cmd_verify(suite, &VerifyOptions { seed, n, eps })?;
            for c in &report.checks {
                println!(
                    "{} {}: {:e} (bound {:e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.extremum,
                    c.bound
                );
            }
            ensure_dir(&out)?;
            write_json(&out.join("report.json"), &report)?;
            Ok(if report.pass { exit::OK } else { exit::INCOMPLETE })
        }
        Command::Reproduce { example, k, smax, jmax, resolution, out } => {
            let opts = ReproduceOptions { k, s_max: smax, j_max: jmax, resolution };
            let report = cmd_reproduce(example, &opts)?;
            for r in &report.reports {
                if !r.pass {
                    println!("FAIL {} index {}: {}", r.example, r.index, r.failures().join(", "));
                }
            }
            println!(
                "{} {} ({} reports)",
                if report.pass { "PASS" } else { "FAIL" },
                serde_json::to_string(&example).unwrap_or_default(),
                report.reports.len()
            );
            ensure_dir(&out)?;
            write_json(&out.join("report.json"), &report)?;
            Ok(if report.pass { exit::OK } else { exit::INCOMPLETE })
        }
        Command::Norm { config } => {
            println!("{}", cmd_norm(&config)?);
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
