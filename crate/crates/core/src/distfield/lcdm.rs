use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistError, Label, LabeledVolume, SurfaceIndex, SurfaceMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEntry {
    pub voxel_index: usize,
    pub label: Label,
    pub distance_mm: f64,
}

/// Signed per-voxel distances, one entry per non-background voxel in
/// increasing voxel order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceMap {
    pub entries: Vec<DistanceEntry>,
}

impl DistanceMap {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn distances(&self, label: Label) -> Vec<f64> {
        self.entries.iter().filter(|e| e.label == label).map(|e| e.distance_mm).collect()
    }

    pub fn gm_distances(&self) -> Vec<f64> {
        self.distances(Label::Gm)
    }
}

/// Computes the distance map against the continuous surface of `mesh`.
pub fn compute_lcdm(volume: &LabeledVolume, mesh: &SurfaceMesh) -> Result<DistanceMap, DistError> {
    mesh.validate()?;
    let index = SurfaceIndex::build(mesh)?;
    Ok(compute_lcdm_with_index(volume, &index))
}

/// Computes the distance map with a prebuilt index. The volume and the
/// indexed mesh must share one mm frame; nothing here can detect a mismatch.
pub fn compute_lcdm_with_index(volume: &LabeledVolume, index: &SurfaceIndex) -> DistanceMap {
    let entries = volume
        .labels()
        .par_iter()
        .enumerate()
        .filter(|(_, &l)| l != Label::Bg)
        .map(|(i, &label)| {
            let d = index.closest_distance(Vec3::from(volume.centroid(i)));
            DistanceEntry { voxel_index: i, label, distance_mm: label.sign() * d }
        })
        .collect();
    DistanceMap { entries }
}

/// Per-subject distance histogram normalized to unit GM mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmdProfile {
    pub bin_mm: f64,
    /// Left edge of the first bin, a multiple of `bin_mm`.
    pub origin_mm: f64,
    pub masses: Vec<f64>,
    pub cdf: Vec<f64>,
    pub gm_count: usize,
}

impl CmdProfile {
    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.masses.len()).map(|k| self.origin_mm + k as f64 * self.bin_mm).collect()
    }
}

/// Histogram of the GM distances with bins `[k·bin, (k+1)·bin)`, from the bin
/// holding the smallest distance to the bin holding the largest.
pub fn cmd_profile(map: &DistanceMap, bin_mm: f64) -> Result<CmdProfile, DistError> {
    if !(bin_mm.is_finite() && bin_mm > 0.0) {
        return Err(DistError::InvalidBin(bin_mm));
    }
    let gm = map.gm_distances();
    if gm.is_empty() {
        return Err(DistError::NoGrayMatter);
    }
    let bin_of = |d: f64| (d / bin_mm).floor() as i64;
    let lo = gm.iter().map(|&d| bin_of(d)).min().unwrap();
    let hi = gm.iter().map(|&d| bin_of(d)).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &d in &gm {
        counts[(bin_of(d) - lo) as usize] += 1;
    }
    let total = gm.len() as f64;
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let mut running = 0usize;
    let cdf = counts
        .iter()
        .map(|&c| {
            running += c;
            running as f64 / total
        })
        .collect();
    Ok(CmdProfile { bin_mm, origin_mm: lo as f64 * bin_mm, masses, cdf, gm_count: gm.len() })
}
