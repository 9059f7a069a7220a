use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use lcdm_core::distfield::io::{read_off, read_volume, write_distance_map};
use lcdm_core::distfield::{compute_lcdm_with_index, DistanceMode, Label, SurfaceIndex};

use crate::error::{CliError, Result};

#[derive(Args)]
pub struct ComputeArgs {
    /// JSON header of the labeled volume.
    #[arg(long)]
    pub volume: PathBuf,
    /// GM/WM boundary surface in OFF format, in the volume's mm frame.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Output distance-map CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Measure to the nearest mesh vertex instead of the nearest surface point.
    #[arg(long)]
    pub vertices: bool,
}

pub fn run(args: ComputeArgs) -> Result<()> {
    let volume = read_volume(&args.volume)?;
    let mesh = read_off(&args.mesh)?;
    let mode = if args.vertices { DistanceMode::Vertices } else { DistanceMode::Surface };
    let index = SurfaceIndex::build_with_mode(&mesh, mode)?;
    let map = compute_lcdm_with_index(&volume, &index);

    let io = |e| CliError::io(&args.out, e);
    let mut w = BufWriter::new(File::create(&args.out).map_err(io)?);
    writeln!(w, "# lcdm compute {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    writeln!(w, "# volume={}", args.volume.display()).map_err(io)?;
    writeln!(w, "# mesh={}", args.mesh.display()).map_err(io)?;
    writeln!(w, "# mode={}", if args.vertices { "vertices" } else { "surface" }).map_err(io)?;
    writeln!(w, "# dropped_degenerate_triangles={}", index.dropped_triangles()).map_err(io)?;
    write_distance_map(&mut w, &map).map_err(io)?;
    w.flush().map_err(io)?;

    for label in [Label::Bg, Label::Gm, Label::Wm, Label::Csf] {
        println!("{}\t{}", label.name(), volume.count(label));
    }
    println!("wrote {} distances to {}", map.entries.len(), args.out.display());
    Ok(())
}
