//! Study data model and the pooled-distance analysis pipeline: filtering,
//! per-subject measures, pooling, outlier screening, group and left-right
//! comparisons, cdf comparisons and report assembly.

mod density;
pub mod io;
mod measures;
mod order;
mod pipeline;
mod report;
pub mod synth;

use std::fmt;
use std::str::FromStr;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::npstats::StatsError;

pub use density::{
    empirical_cdf, flag_outliers, kde, kde_on_grid, silverman_bandwidth, Bandwidth, Density, GridSpec, OutlierScores,
    OutlierThreshold,
};
pub use measures::{descriptives, filter_distances, subject_measures, volume_mm3, Descriptives, Filtered, SubjectMeasures};
pub use order::{infer_stochastic_order, OrderVerdict};
pub use pipeline::{pool, run_study, OutlierMode, PooledSample, StudyConfig};
pub use density::MIN_OUTLIER_SCORE;
pub use report::{
    Cell, CorrelationCell, FilterSummary, GroupVolumeRow, Measure, NormalityRow, OrderRow, OutlierRow, PooledSummaryRow,
    StudyReport, SubjectRow, Variant,
};

/// Default filter bounds in mm.
pub const DEFAULT_BOUNDS: (f64, f64) = (-0.5, 5.5);

/// Diagnostic group of a subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema)]
pub enum Group {
    /// Major depressive disorder.
    #[serde(rename = "MDD")]
    Mdd,
    /// High-risk co-twin.
    #[serde(rename = "HR")]
    Hr,
    /// Control.
    #[serde(rename = "Ctrl")]
    Ctrl,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Mdd, Group::Hr, Group::Ctrl];

    pub fn name(self) -> &'static str {
        match self {
            Group::Mdd => "MDD",
            Group::Hr => "HR",
            Group::Ctrl => "Ctrl",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = MorphoError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mdd" => Ok(Group::Mdd),
            "hr" => Ok(Group::Hr),
            "ctrl" | "control" => Ok(Group::Ctrl),
            _ => Err(MorphoError::UnknownGroup(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema)]
pub enum Hemisphere {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Hemisphere {
    pub const BOTH: [Hemisphere; 2] = [Hemisphere::Left, Hemisphere::Right];

    pub fn name(self) -> &'static str {
        match self {
            Hemisphere::Left => "L",
            Hemisphere::Right => "R",
        }
    }
}

impl fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Hemisphere {
    type Err = MorphoError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L" | "LEFT" => Ok(Hemisphere::Left),
            "R" | "RIGHT" => Ok(Hemisphere::Right),
            _ => Err(MorphoError::UnknownHemisphere(s.to_string())),
        }
    }
}

/// One subject's GM distances (mm) for both hemispheres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub group: Group,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin_pair_id: Option<String>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl SubjectRecord {
    pub fn new(id: impl Into<String>, group: Group, left: Vec<f64>, right: Vec<f64>) -> Self {
        SubjectRecord { subject_id: id.into(), group, twin_pair_id: None, left, right }
    }

    pub fn with_twin(mut self, pair: impl Into<String>) -> Self {
        self.twin_pair_id = Some(pair.into());
        self
    }

    pub fn sample(&self, h: Hemisphere) -> &[f64] {
        match h {
            Hemisphere::Left => &self.left,
            Hemisphere::Right => &self.right,
        }
    }
}

#[derive(Debug, Error)]
pub enum MorphoError {
    #[error("lower bound {lo} must be below upper bound {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("need at least {needed} subjects, got {got}")]
    TooFewSubjects { needed: usize, got: usize },
    #[error("sample has zero spread; no kernel density bandwidth")]
    ZeroSpread,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("empty sample")]
    EmptySample,
    #[error("no subjects left in {group} {hemisphere} after exclusion")]
    EmptyPool { group: Group, hemisphere: Hemisphere },
    #[error("stochastic order needs a Less and a Greater result, got {0:?} and {1:?}")]
    MismatchedAlternatives(crate::npstats::Alternative, crate::npstats::Alternative),
    #[error("unknown group label {0:?}")]
    UnknownGroup(String),
    #[error("unknown hemisphere {0:?}")]
    UnknownHemisphere(String),
    #[error("study needs at least 2 groups, found {0}")]
    TooFewGroups(usize),
    #[error("group {0} has no subjects; list only the groups present under `groups` in the study config")]
    EmptyGroup(Group),
    #[error("subject {subject} ({hemisphere}) appears more than once")]
    DuplicateSubject { subject: String, hemisphere: Hemisphere },
    #[error("subject {subject} is listed under both {first} and {second}")]
    ConflictingGroup { subject: String, first: Group, second: Group },
    #[error("paired MDD-HR tests need twin links: {0}")]
    MissingPairLink(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sim(#[from] crate::simkit::SimError),
    #[error(transparent)]
    Dist(#[from] crate::distfield::DistError),
}

pub type Result<T> = std::result::Result<T, MorphoError>;

#[cfg(test)]
mod tests;
