use std::path::{Path, PathBuf};

use clap::Args;
use lcdm_core::morpho::io::{read_distance_table, read_manifest};
use lcdm_core::morpho::{run_study, Group, OutlierMode, OutlierThreshold, StudyConfig, StudyReport, SubjectRecord};

use crate::error::{CliError, Result};
use crate::{create_dir, parse_threshold, resolve_seed, InputArgs};

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Significance level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Seed for the simulated normality p-values.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulation size of the normality p-values; 0 skips them [default: 200].
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Outlier cut: "1.5x" for a multiple of the group's median score, or an
    /// absolute L1 score [default: 1.5x].
    #[arg(long, value_parser = parse_threshold)]
    pub outlier_thresh: Option<OutlierThreshold>,
    /// Groups in the study, comma separated [default: MDD,HR,Ctrl].
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<String>>,
    /// Only analyse all subjects.
    #[arg(long, conflicts_with = "outliers_only")]
    pub no_outlier_removal: bool,
    /// Only analyse the subjects left after outlier removal.
    #[arg(long)]
    pub outliers_only: bool,
    /// Output directory for report.json and the CSV tables.
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

/// Loads the config file, if any. Returns it with whether it set a seed.
pub fn load_config(path: Option<&Path>) -> Result<(StudyConfig, bool)> {
    let Some(path) = path else {
        return Ok((StudyConfig::default(), false));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let invalid = |e: serde_json::Error| CliError::Invalid(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(invalid)?;
    let has_seed = value.get("seed").is_some();
    Ok((serde_json::from_value(value).map_err(invalid)?, has_seed))
}

pub fn load_subjects(input: &Path, config: &StudyConfig) -> Result<Vec<SubjectRecord>> {
    let is_manifest = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    Ok(if is_manifest {
        read_manifest(input, &config.group_labels)?
    } else {
        read_distance_table(input, &config.group_labels)?
    })
}

pub fn report_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(StudyReport)).expect("schema serializes")
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    let (mut config, config_seed) = load_config(args.input.config.as_deref())?;
    if let Some(b) = args.input.bounds {
        config.bounds = b;
    }
    if let Some(b) = args.input.bandwidth {
        config.bandwidth = b;
    }
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    if let Some(r) = args.replicates {
        config.normality_replicates = r;
    }
    if let Some(t) = args.outlier_thresh {
        config.outlier_threshold = t;
    }
    if let Some(names) = &args.groups {
        config.groups = names
            .iter()
            .map(|n| n.parse::<Group>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    if args.no_outlier_removal {
        config.outlier_mode = OutlierMode::AllSubjectsOnly;
    } else if args.outliers_only {
        config.outlier_mode = OutlierMode::RemovedOnly;
    }
    config.seed = match args.seed {
        Some(s) => s,
        None if config_seed => config.seed,
        None => resolve_seed(None),
    };
    config.validate()?;

    let subjects = load_subjects(&args.input.input, &config)?;
    let report = run_study(&subjects, &config)?;

    create_dir(&args.out)?;
    report.write_json(&args.out.join("report.json"))?;
    let tables = report.write_tables(&args.out)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("subjects: {}", report.subjects.len());
    println!("excluded as outliers: {}", report.excluded_subjects.join(" "));
    println!("seed: {}", config.seed);
    println!("wrote report.json and {} tables to {}", tables.len(), args.out.display());
    Ok(())
}
