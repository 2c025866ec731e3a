use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use taumhd_cli::config::RunConfig;
use taumhd_cli::pipeline;

/// Spectral-Galerkin solver and estimate verifier for time-periodic MHD in
/// a channel with time-periodic wall data.
#[derive(Parser)]
#[command(name = "taumhd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write orbit, certificate, and manifest.
    Solve {
        config: PathBuf,
        /// Overrides of the form key=value (dotted paths allowed).
        overrides: Vec<String>,
    },
    /// Solve at several mode counts and check the inter-resolution gaps.
    Converge {
        config: PathBuf,
        overrides: Vec<String>,
        /// Comma-separated ascending mode counts, e.g. 8,16,32,64.
        #[arg(long, value_delimiter = ',')]
        k_list: Vec<usize>,
    },
    /// Pure Navier-Stokes reduction: magnetic data must vanish and the
    /// induction block must stay at numerical zero.
    NsMode {
        config: PathBuf,
        overrides: Vec<String>,
    },
    /// Re-run the certificate suite on a saved orbit.
    Verify {
        config: PathBuf,
        overrides: Vec<String>,
        /// Orbit CSV produced by a previous run of the same config.
        #[arg(long)]
        orbit: PathBuf,
    },
    /// Build the Stokes basis and warm the cache.
    Basis {
        config: PathBuf,
        overrides: Vec<String>,
    },
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config, overrides } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let out = pipeline::cmd_solve(&cfg)?;
            println!(
                "solve: residual {:.3e} after {} iterations; checks {} ({} records); outputs in {}",
                out.orbit.periodicity_residual,
                out.orbit.iterations,
                if out.all_checks_pass { "PASS" } else { "FAIL" },
                out.report.checks.len(),
                cfg.out_dir.display()
            );
        }
        Command::Converge { config, overrides, k_list } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let sweep = pipeline::cmd_converge(&cfg, &k_list)?;
            println!(
                "converge: gaps {:?} -> {}",
                sweep.gaps,
                if sweep.pass { "PASS" } else { "FAIL" }
            );
        }
        Command::NsMode { config, overrides } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let out = pipeline::cmd_ns_mode(&cfg)?;
            println!(
                "ns-mode: residual {:.3e}; magnetic block at numerical zero; checks {}",
                out.orbit.periodicity_residual,
                if out.all_checks_pass { "PASS" } else { "FAIL" }
            );
        }
        Command::Verify { config, overrides, orbit } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let report = pipeline::cmd_verify(&cfg, &orbit)?;
            let pass = report.checks.iter().filter(|c| c.pass).count();
            println!("verify: {pass}/{} checks pass", report.checks.len());
        }
        Command::Basis { config, overrides } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            pipeline::cmd_basis(&cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
