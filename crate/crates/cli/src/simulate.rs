use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use lcdm_core::simkit::{run_study, EstimateTable, SimConfig, StudyKind, SEED_RULE};

use crate::error::{CliError, Result};
use crate::{resolve_seed, Mode};

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub mode: Mode,
    /// SimConfig JSON: one object, or an array of objects for several rows.
    pub config: PathBuf,
    /// Monte Carlo replicates, overriding the config.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Base seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Significance level, overriding the config.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_configs(text: &str) -> serde_json::Result<Vec<SimConfig>> {
    match serde_json::from_str::<serde_json::Value>(text)? {
        serde_json::Value::Array(items) => items.into_iter().map(serde_json::from_value).collect(),
        other => Ok(vec![serde_json::from_value(other)?]),
    }
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut configs =
        parse_configs(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", args.config.display())))?;
    if configs.is_empty() {
        return Err(CliError::Invalid(format!("{}: no configurations", args.config.display())));
    }
    let needs_entropy = args.seed.is_none() && configs.iter().any(|c| c.seed.is_none());
    let drawn = needs_entropy.then(|| resolve_seed(None));
    for c in &mut configs {
        if let Some(r) = args.replicates {
            c.replicates = r;
        }
        if let Some(a) = args.alpha {
            c.alpha = a;
        }
        c.seed = args.seed.or(c.seed).or(drawn);
        c.validate()?;
    }
    let kind = match args.mode {
        crate::Mode::Size => StudyKind::Size,
        crate::Mode::Power => StudyKind::Power,
    };
    if kind == StudyKind::Size && configs.iter().any(|c| c.params().iter().any(|p| !p.is_null())) {
        return Err(CliError::Invalid("size studies need null parameters (r = 1, eta = 0) for every sample".into()));
    }
    if kind == StudyKind::Power && configs.iter().any(|c| c.params().iter().all(|p| p.is_null())) {
        log::warn!("a power configuration has only null parameters; its rates estimate the size");
    }
    let mut table: Option<EstimateTable> = None;
    for c in &configs {
        let t = run_study(c, kind)?;
        match &mut table {
            None => table = Some(t),
            Some(acc) => acc.extend(t)?,
        }
    }
    let table = table.expect("at least one configuration");
    eprintln!("seed: {} ({SEED_RULE})", table.seed);
    match &args.out {
        Some(path) => {
            let io = |e| CliError::io(path, e);
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            table.write_csv(&mut w).map_err(io)?;
            w.flush().map_err(io)?;
        }
        None => {
            let stdout = std::io::stdout();
            table.write_csv(stdout.lock()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}
