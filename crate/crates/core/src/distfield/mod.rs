//! Labeled cortical distance maps: signed distances from the voxels of a
//! labeled lattice to a triangulated tissue boundary.

mod bvh;
mod geom;
pub mod io;
mod lcdm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bvh::{build_index, closest_distance, ClosestHit, DistanceMode, SurfaceIndex, DEGENERATE_AREA_MM2};
pub use geom::{closest_point_on_triangle, triangle_area, Aabb, Feature, Vec3};
pub use lcdm::{cmd_profile, compute_lcdm, compute_lcdm_with_index, CmdProfile, DistanceEntry, DistanceMap};

/// Default isotropic voxel edge length in mm.
pub const DEFAULT_VOXEL_MM: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("every triangle in the mesh is degenerate")]
    DegenerateMesh,
    #[error("triangle {triangle} references vertex {index}, mesh has {vertices} vertices")]
    BadTriangleIndex { triangle: usize, index: usize, vertices: usize },
    #[error("non-finite vertex coordinate at vertex {0}")]
    NonFiniteVertex(usize),
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("unknown label code {0}")]
    UnknownLabel(u8),
    #[error("distance map has no GM entries")]
    NoGrayMatter,
    #[error("bin width must be positive and finite, got {0}")]
    InvalidBin(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Tissue class of a voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Bg = 0,
    Gm = 1,
    Wm = 2,
    Csf = 3,
}

impl Label {
    pub fn from_code(code: u8) -> Result<Self, DistError> {
        match code {
            0 => Ok(Label::Bg),
            1 => Ok(Label::Gm),
            2 => Ok(Label::Wm),
            3 => Ok(Label::Csf),
            c => Err(DistError::UnknownLabel(c)),
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Bg => "BG",
            Label::Gm => "GM",
            Label::Wm => "WM",
            Label::Csf => "CSF",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BG" => Some(Label::Bg),
            "GM" => Some(Label::Gm),
            "WM" => Some(Label::Wm),
            "CSF" => Some(Label::Csf),
            _ => None,
        }
    }

    /// Sign applied to the unsigned distance: WM voxels lie inside the
    /// boundary and get negative distances.
    pub fn sign(self) -> f64 {
        if self == Label::Wm {
            -1.0
        } else {
            1.0
        }
    }
}

/// A labeled voxel lattice. Labels are stored x-fastest: the voxel `(i, j, k)`
/// sits at `i + dims[0] * (j + dims[1] * k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVolume {
    dims: [usize; 3],
    voxel_mm: [f64; 3],
    origin_mm: [f64; 3],
    labels: Vec<Label>,
}

impl LabeledVolume {
    pub fn new(dims: [usize; 3], voxel_mm: [f64; 3], labels: Vec<Label>) -> Result<Self, DistError> {
        Self::with_origin(dims, voxel_mm, [0.0; 3], labels)
    }

    pub fn with_origin(
        dims: [usize; 3],
        voxel_mm: [f64; 3],
        origin_mm: [f64; 3],
        labels: Vec<Label>,
    ) -> Result<Self, DistError> {
        if dims.contains(&0) {
            return Err(DistError::InvalidVolume(format!("dims must be positive, got {dims:?}")));
        }
        if voxel_mm.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(DistError::InvalidVolume(format!("voxel size must be positive, got {voxel_mm:?}")));
        }
        if origin_mm.iter().any(|v| !v.is_finite()) {
            return Err(DistError::InvalidVolume("origin must be finite".into()));
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| DistError::InvalidVolume("dims overflow".into()))?;
        if labels.len() != n {
            return Err(DistError::InvalidVolume(format!(
                "label array has {} entries, dims need {n}",
                labels.len()
            )));
        }
        Ok(LabeledVolume { dims, voxel_mm, origin_mm, labels })
    }

    pub fn from_codes(dims: [usize; 3], voxel_mm: [f64; 3], codes: &[u8]) -> Result<Self, DistError> {
        let labels = codes.iter().map(|&c| Label::from_code(c)).collect::<Result<_, _>>()?;
        Self::new(dims, voxel_mm, labels)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_mm(&self) -> [f64; 3] {
        self.voxel_mm
    }

    pub fn origin_mm(&self) -> [f64; 3] {
        self.origin_mm
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Geometric centre of the voxel cube, in mm.
    pub fn centroid(&self, index: usize) -> [f64; 3] {
        let c = self.coords(index);
        std::array::from_fn(|a| self.origin_mm[a] + (c[a] as f64 + 0.5) * self.voxel_mm[a])
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Triangulated surface in mm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl SurfaceMesh {
    /// Builds a mesh after checking indices and coordinates. Degenerate
    /// triangles are kept here and skipped by [`SurfaceIndex`].
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self, DistError> {
        let mesh = SurfaceMesh { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), DistError> {
        if let Some(i) = self.vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(DistError::NonFiniteVertex(i));
        }
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= n) {
                return Err(DistError::BadTriangleIndex { triangle: t, index, vertices: n });
            }
        }
        Ok(())
    }

    /// Removes triangles with area below [`DEGENERATE_AREA_MM2`] and returns
    /// how many were dropped.
    pub fn drop_degenerate(&mut self) -> usize {
        let before = self.triangles.len();
        let verts = &self.vertices;
        self.triangles.retain(|t| {
            let [a, b, c] = t.map(|i| Vec3::from(verts[i]));
            triangle_area(a, b, c) >= DEGENERATE_AREA_MM2
        });
        let dropped = before - self.triangles.len();
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate triangle(s)");
        }
        dropped
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> SurfaceMesh {
        SurfaceMesh {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

#[cfg(test)]
mod tests;
