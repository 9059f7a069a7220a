//! Distance tables and study manifests.
//!
//! A distance table is a CSV with one row per voxel distance and the columns
//! `subject_id,group,hemisphere,distance_mm`, plus an optional
//! `twin_pair_id`. A manifest is a JSON list of subjects whose per-hemisphere
//! distances live in distance-map CSVs written by the `compute` step.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Group, Hemisphere, MorphoError, Result, SubjectRecord};
use crate::distfield::io::read_distance_map;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> MorphoError + '_ {
    move |source| MorphoError::Io { path: path.display().to_string(), source }
}

/// Resolves a group label, trying the configured mapping before the
/// built-in names.
pub fn resolve_group(label: &str, labels: &BTreeMap<String, Group>) -> Result<Group> {
    match labels.get(label.trim()) {
        Some(&g) => Ok(g),
        None => label.parse(),
    }
}

#[derive(Default)]
struct Partial {
    group: Option<Group>,
    twin: Option<String>,
    left: Vec<f64>,
    right: Vec<f64>,
}

/// Parses a distance table. Subjects come back sorted by id; distances keep
/// their row order.
pub fn parse_distance_table<R: Read>(reader: R, labels: &BTreeMap<String, Group>) -> Result<Vec<SubjectRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| MorphoError::Parse { line: 1, msg: e.to_string() })?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = ["subject_id", "group", "hemisphere", "distance_mm"];
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(required) {
        *slot = col(name).ok_or_else(|| MorphoError::Parse { line: 1, msg: format!("missing column {name:?}") })?;
    }
    let twin_col = col("twin_pair_id");
    let mut subjects: BTreeMap<String, Partial> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| MorphoError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |msg: String| MorphoError::Parse { line, msg };
        let field = |i: usize| rec.get(i).unwrap_or("");
        let id = field(idx[0]);
        if id.is_empty() {
            return Err(parse("empty subject_id".into()));
        }
        let group = resolve_group(field(idx[1]), labels).map_err(|e| parse(e.to_string()))?;
        let hemi: Hemisphere = field(idx[2]).parse().map_err(|e: MorphoError| parse(e.to_string()))?;
        let d: f64 = field(idx[3]).parse().map_err(|_| parse(format!("invalid distance {:?}", field(idx[3]))))?;
        if !d.is_finite() {
            return Err(parse(format!("non-finite distance {d}")));
        }
        let twin = twin_col.map(field).filter(|t| !t.is_empty());
        let entry = subjects.entry(id.to_string()).or_default();
        match entry.group {
            Some(first) if first != group => {
                return Err(MorphoError::ConflictingGroup { subject: id.to_string(), first, second: group })
            }
            _ => entry.group = Some(group),
        }
        if let Some(t) = twin {
            match &entry.twin {
                Some(prev) if prev != t => {
                    return Err(parse(format!("subject {id} has twin_pair_id {prev:?} and {t:?}")));
                }
                _ => entry.twin = Some(t.to_string()),
            }
        }
        match hemi {
            Hemisphere::Left => entry.left.push(d),
            Hemisphere::Right => entry.right.push(d),
        }
    }
    Ok(subjects
        .into_iter()
        .map(|(id, p)| SubjectRecord {
            subject_id: id,
            group: p.group.expect("group set with first row"),
            twin_pair_id: p.twin,
            left: p.left,
            right: p.right,
        })
        .collect())
}

pub fn read_distance_table(path: &Path, labels: &BTreeMap<String, Group>) -> Result<Vec<SubjectRecord>> {
    parse_distance_table(File::open(path).map_err(io_err(path))?, labels)
}

pub fn write_distance_table<W: Write>(out: W, subjects: &[SubjectRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| MorphoError::Invalid(e.to_string());
    w.write_record(["subject_id", "group", "hemisphere", "distance_mm", "twin_pair_id"]).map_err(err)?;
    for s in subjects {
        let twin = s.twin_pair_id.as_deref().unwrap_or("");
        for h in Hemisphere::BOTH {
            for d in s.sample(h) {
                w.write_record([s.subject_id.as_str(), s.group.name(), h.name(), &d.to_string(), twin]).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| MorphoError::Invalid(e.to_string()))
}

/// One subject in a manifest; map paths are relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin_pair_id: Option<String>,
    pub left: PathBuf,
    pub right: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub subjects: Vec<ManifestEntry>,
}

/// Loads the GM distances of every subject listed in a manifest.
pub fn read_manifest(path: &Path, labels: &BTreeMap<String, Group>) -> Result<Vec<SubjectRecord>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| MorphoError::Parse { line: e.line(), msg: e.to_string() })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out: Vec<SubjectRecord> = Vec::with_capacity(manifest.subjects.len());
    for e in manifest.subjects {
        let group = resolve_group(&e.group, labels)?;
        if let Some(prev) = out.iter().find(|s| s.subject_id == e.subject_id) {
            return Err(if prev.group == group {
                MorphoError::Invalid(format!("subject {} is listed twice", e.subject_id))
            } else {
                MorphoError::ConflictingGroup { subject: e.subject_id, first: prev.group, second: group }
            });
        }
        let left = read_distance_map(&base.join(&e.left))?.gm_distances();
        let right = read_distance_map(&base.join(&e.right))?.gm_distances();
        out.push(SubjectRecord { subject_id: e.subject_id, group, twin_pair_id: e.twin_pair_id, left, right });
    }
    out.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(out)
}
