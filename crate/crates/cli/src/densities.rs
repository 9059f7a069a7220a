use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use lcdm_core::morpho::{empirical_cdf, filter_distances, kde, pool, GridSpec, Group, Hemisphere};

use crate::analyze::{load_config, load_subjects};
use crate::error::{CliError, Result};
use crate::{create_dir, InputArgs};

#[derive(Args)]
pub struct DensitiesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Evaluation grid as LO:HI:POINTS [default: the filter bounds, 241 points].
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<(f64, f64, usize)>,
    /// Output directory for densities.csv.
    #[arg(long, default_value = "densities")]
    pub out: PathBuf,
}

fn parse_grid(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err("expected LO:HI:POINTS".into());
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("invalid number {v:?}"));
    let points = n.trim().parse::<usize>().map_err(|_| format!("invalid point count {n:?}"))?;
    Ok((num(lo)?, num(hi)?, points))
}

pub fn run(args: DensitiesArgs) -> Result<()> {
    let (mut config, _) = load_config(args.input.config.as_deref())?;
    if let Some(b) = args.input.bounds {
        config.bounds = b;
    }
    if let Some(b) = args.input.bandwidth {
        config.bandwidth = b;
    }
    let [lo, hi] = config.bounds;
    let (glo, ghi, points) = args.grid.unwrap_or((lo, hi, 241));
    let grid = GridSpec::Range { lo: glo, hi: ghi, points };
    let subjects = load_subjects(&args.input.input, &config)?;

    let mut filtered = Vec::with_capacity(subjects.len());
    for s in &subjects {
        let mut s = s.clone();
        s.left = filter_distances(&s.left, lo, hi)?.values;
        s.right = filter_distances(&s.right, lo, hi)?.values;
        filtered.push(s);
    }

    let mut series: Vec<(String, String, Hemisphere, Vec<f64>)> = Vec::new();
    for s in &filtered {
        for h in Hemisphere::BOTH {
            series.push(("subject".into(), s.subject_id.clone(), h, s.sample(h).to_vec()));
        }
    }
    let none = Default::default();
    for g in Group::ALL {
        for h in Hemisphere::BOTH {
            if let Ok(p) = pool(&filtered, g, h, &none) {
                series.push(("pooled".into(), g.name().into(), h, p.values));
            }
        }
    }

    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for (scope, id, h, values) in &series {
        let group = if scope == "pooled" {
            id.clone()
        } else {
            filtered.iter().find(|s| &s.subject_id == id).map_or(String::new(), |s| s.group.name().to_string())
        };
        let density = match kde(values, config.bandwidth, grid) {
            Ok(d) => d,
            Err(e) => {
                warnings.push(format!("{scope} {id} {h} skipped: {e}"));
                continue;
            }
        };
        let cdf = empirical_cdf(values, &density.grid)?;
        for ((x, v), c) in density.grid.iter().zip(&density.values).zip(&cdf) {
            rows.push(format!("{scope},{id},{group},{h},{},{x},{v},{c}", density.bandwidth));
        }
    }

    create_dir(&args.out)?;
    let path = args.out.join("densities.csv");
    let io = |e| CliError::io(&path, e);
    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
    writeln!(w, "# lcdm densities {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    writeln!(w, "# input={}", args.input.input.display()).map_err(io)?;
    writeln!(w, "# bounds={lo}:{hi}").map_err(io)?;
    writeln!(w, "# bandwidth={}", config.bandwidth).map_err(io)?;
    writeln!(w, "# grid={glo}:{ghi}:{points}").map_err(io)?;
    for warning in &warnings {
        writeln!(w, "# warning: {warning}").map_err(io)?;
        eprintln!("warning: {warning}");
    }
    writeln!(w, "scope,id,group,hemisphere,bandwidth_mm,grid_mm,density,cdf").map_err(io)?;
    for r in rows {
        writeln!(w, "{r}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    println!("wrote {}", path.display());
    Ok(())
}
