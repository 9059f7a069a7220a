//! Labeled cortical distance maps (LCDMs) and the statistics built on them.
//!
//! The crate is split along the lines of the analysis:
//!
//! * [`distfield`] turns a labeled voxel lattice and a triangulated GM/WM
//!   boundary into signed per-voxel distances.
//! * [`npstats`] is the hypothesis-test battery (rank tests, ANOVA variants,
//!   Welch/paired t, Brown-Forsythe, Kolmogorov-Smirnov, Lilliefors,
//!   Spearman, Holm).
//! * [`morpho`] holds the study data model and the pooled-distance pipeline.
//! * [`simkit`] generates LCDM-like synthetic distances and estimates the
//!   empirical size and power of the tests.

pub mod distfield;
pub mod morpho;
pub mod npstats;
pub mod simkit;
