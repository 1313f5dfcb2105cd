//! `lrtc`: low multilinear-rank tensor completion from the command line.

use clap::{Parser, Subcommand};
use lrtc_cli::{cmd_bench, cmd_gen, cmd_inpaint, cmd_solve, exit_code_for, BenchArgs, GenArgs, InpaintArgs, SolveArgs, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "lrtc")]
#[command(about = "Low multilinear-rank tensor completion", long_about = None)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Generate a synthetic low multilinear-rank completion problem
    Gen(GenArgs),
    /// Complete a masked tensor and record the convergence trace
    Solve(SolveArgs),
    /// Run a benchmark grid and aggregate trial means
    Bench(BenchArgs),
    /// Restore missing pixels of a PPM image
    Inpaint(InpaintArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's rendered help/error text, but use the usage exit
            // code for actual mistakes (help and version requests stay 0).
            let code = if e.exit_code() == 0 { 0 } else { EXIT_USAGE };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match &cli.command {
        Commands::Gen(args) => cmd_gen(args),
        Commands::Solve(args) => cmd_solve(args),
        Commands::Bench(args) => cmd_bench(args),
        Commands::Inpaint(args) => cmd_inpaint(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}
