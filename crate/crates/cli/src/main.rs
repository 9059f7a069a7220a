//! `lcdm`: compute labeled cortical distance maps, analyse group studies of
//! pooled distances and run the Monte Carlo size/power harness.

mod analyze;
mod compute;
mod densities;
mod error;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lcdm_core::morpho::{Bandwidth, OutlierThreshold};

use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "lcdm", version, about = "Labeled cortical distance maps and pooled-distance statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Signed distance from every labeled voxel to the GM/WM surface.
    Compute(compute::ComputeArgs),
    /// Group, asymmetry and cdf comparisons of a study's distances.
    Analyze(analyze::AnalyzeArgs),
    /// Empirical size or power of the group tests on synthetic samples.
    Simulate(simulate::SimulateArgs),
    /// Plot-ready kernel densities and empirical cdfs.
    Densities(densities::DensitiesArgs),
    /// Print the JSON schema of the analysis report.
    Schema,
}

/// Options shared by the commands that read a distance table.
#[derive(Args, Clone)]
pub struct InputArgs {
    /// Distance table CSV, or a JSON manifest of per-subject distance maps.
    pub input: PathBuf,
    /// Study config JSON; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Filter bounds in mm, as LO:HI [default: -0.5:5.5].
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    pub bounds: Option<[f64; 2]>,
    /// Kernel bandwidth in mm, or "silverman" [default: silverman].
    #[arg(long)]
    pub bandwidth: Option<Bandwidth>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Mode {
    Size,
    Power,
}

pub fn parse_bounds(s: &str) -> std::result::Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("invalid number {v:?}"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    if !(lo < hi) {
        return Err(format!("lower bound {lo} must be below upper bound {hi}"));
    }
    Ok([lo, hi])
}

pub fn parse_threshold(s: &str) -> std::result::Result<OutlierThreshold, String> {
    s.parse::<OutlierThreshold>().map_err(|e| e.to_string())
}

/// Uses the given seed, or draws one from OS entropy and reports it.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s} (drawn from OS entropy; pass --seed {s} to reproduce)");
        s
    })
}

pub fn create_dir(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compute(a) => compute::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Densities(a) => densities::run(a),
        Command::Schema => {
            println!("{}", analyze::report_schema());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
