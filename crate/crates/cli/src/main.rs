//! `slag`: generate test patches, check and solve for minimal Lagrangian
//! patches with boundary on a scaffold, and deform the scaffold.
//!
//! Exit status: 0 on success, 1 on invalid input (including a scaffold that
//! fails its conditions), 2 when a solver fails.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "slag",
    version,
    about = "Minimal Lagrangian patches with boundary on a symplectic scaffold"
)]
pub struct Cli {
    /// Seed for randomized checks; recorded in every report header.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Residual tolerance of the Newton solves.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated planar test patch in the x-plane of C².
    Generate {
        /// disk, annulus, pants or cylinder.
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 16)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Residuals of the special Lagrangian equations of a patch.
    CheckSlag {
        #[arg(long)]
        mesh: PathBuf,
        /// Phase; defaults to the best-fit phase of the patch.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Neumann harmonic k-forms of a patch.
    Harmonic {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        /// CSV with one column per basis form.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal Lagrangian near the patch with boundary on the scaffold.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        scaffold: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// One Newton-corrected step along each moduli direction.
    Moduli {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        scaffold: PathBuf,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Continuation onto the scaffold moved by a Hamiltonian flow.
    ScaffoldFlow {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        scaffold: PathBuf,
        /// Section file, or a built-in such as `radial(0.21)`.
        #[arg(long)]
        section: String,
        /// Continuation steps.
        #[arg(long, default_value_t = 5)]
        steps: usize,
        /// Implicit-midpoint steps of each flow.
        #[arg(long, default_value_t = 100)]
        flow_steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(report) => {
            if !cli.quiet {
                print!("{report}");
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            if !cli.quiet {
                print!("{}", failure.report);
            }
            eprintln!("error: {}", failure.error);
            ExitCode::from(if failure.error.is_validation() { 1 } else { 2 })
        }
    }
}
