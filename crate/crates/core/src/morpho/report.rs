use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::pipeline::StudyConfig;
use super::{Descriptives, Group, Hemisphere, MorphoError, OrderVerdict, Result};
use crate::npstats::{Alternative, Method};

/// Which subjects entered a pooled analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    AllSubjects,
    OutliersRemoved,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::AllSubjects => "all_subjects",
            Variant::OutliersRemoved => "outliers_removed",
        }
    }
}

/// Per-subject measure compared between groups and hemispheres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Volume,
    Median,
    Mode,
    Range,
    Variance,
}

impl Measure {
    pub const ALL: [Measure; 5] = [Measure::Volume, Measure::Median, Measure::Mode, Measure::Range, Measure::Variance];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Volume => "volume",
            Measure::Median => "median",
            Measure::Mode => "mode",
            Measure::Range => "range",
            Measure::Variance => "variance",
        }
    }
}

/// One comparison in a report table.
///
/// `p_less`/`p_greater` are the raw one-sided p-values; `direction` names the
/// tail with the smaller of the two. `p_adjusted` is the Holm-adjusted
/// two-sided p-value within `family`. KS cells also carry Holm-adjusted
/// one-sided p-values, each adjusted within the family separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Cell {
    pub family: String,
    pub variant: Option<Variant>,
    pub measure: Option<Measure>,
    pub hemisphere: Option<Hemisphere>,
    pub group: Option<Group>,
    pub first: String,
    pub second: String,
    pub method: Method,
    pub paired: bool,
    pub n_first: usize,
    pub n_second: usize,
    pub statistic: Option<f64>,
    pub p_two_sided: Option<f64>,
    pub p_less: Option<f64>,
    pub p_greater: Option<f64>,
    pub direction: Option<Alternative>,
    pub p_adjusted: Option<f64>,
    pub p_less_adjusted: Option<f64>,
    pub p_greater_adjusted: Option<f64>,
    pub significant: bool,
    pub error: Option<String>,
}

/// Spearman correlation between two per-subject volume series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CorrelationCell {
    pub family: String,
    pub label: String,
    pub group: Option<Group>,
    pub hemisphere: Option<Hemisphere>,
    pub n: usize,
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub significant: bool,
    pub error: Option<String>,
}

/// Trimming counts for one subject and hemisphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct FilterSummary {
    pub subject_id: String,
    pub group: Group,
    pub hemisphere: Hemisphere,
    pub kept: usize,
    pub below: usize,
    pub above: usize,
}

/// Per-subject volumes and descriptive measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SubjectRow {
    pub subject_id: String,
    pub group: Group,
    pub twin_pair_id: Option<String>,
    pub left_volume_mm3: f64,
    pub right_volume_mm3: f64,
    pub left: Option<Descriptives>,
    pub right: Option<Descriptives>,
}

/// Mean and standard deviation of subject volumes; `group` is empty for the
/// whole study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct GroupVolumeRow {
    pub group: Option<Group>,
    pub n_subjects: usize,
    pub left_mean_mm3: f64,
    pub left_sd_mm3: Option<f64>,
    pub right_mean_mm3: f64,
    pub right_sd_mm3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct OutlierRow {
    pub group: Group,
    pub hemisphere: Hemisphere,
    pub subject_id: String,
    pub score: f64,
    pub threshold: f64,
    pub flagged: bool,
}

/// Summary of one pooled sample; `group` is empty for all groups combined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PooledSummaryRow {
    pub variant: Variant,
    pub group: Option<Group>,
    pub hemisphere: Hemisphere,
    pub n_subjects: usize,
    pub n: usize,
    pub mean_mm: f64,
    pub median_mm: f64,
    pub sd_mm: f64,
}

/// Stochastic ordering between two pooled samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct OrderRow {
    pub variant: Variant,
    pub hemisphere: Hemisphere,
    pub first: Group,
    pub second: Group,
    pub p_less_adjusted: f64,
    pub p_greater_adjusted: f64,
    pub verdict: OrderVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct NormalityRow {
    pub variant: Variant,
    pub group: Group,
    pub hemisphere: Hemisphere,
    pub n: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

/// A csv table as `(file name, header, rows)`.
pub type Table = (&'static str, Vec<String>, Vec<Vec<String>>);

/// Full output of a study analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct StudyReport {
    pub version: String,
    pub config: StudyConfig,
    pub groups: Vec<Group>,
    pub excluded_subjects: Vec<String>,
    pub filtering: Vec<FilterSummary>,
    pub subjects: Vec<SubjectRow>,
    pub volumes: Vec<GroupVolumeRow>,
    pub measure_pairwise: Vec<Cell>,
    pub measure_asymmetry: Vec<Cell>,
    pub correlations: Vec<CorrelationCell>,
    pub measure_cdf: Vec<Cell>,
    pub outliers: Vec<OutlierRow>,
    pub pooled_summary: Vec<PooledSummaryRow>,
    pub pooled_location: Vec<Cell>,
    pub pooled_hov: Vec<Cell>,
    pub pooled_asymmetry: Vec<Cell>,
    pub pooled_cdf: Vec<Cell>,
    pub stochastic_order: Vec<OrderRow>,
    pub normality: Vec<NormalityRow>,
    pub warnings: Vec<String>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn opt_name<T: Copy>(v: Option<T>, name: impl Fn(T) -> &'static str) -> String {
    v.map(name).unwrap_or_default().to_string()
}

fn alt_name(a: Option<Alternative>) -> String {
    opt_name(a, Alternative::short)
}

const CELL_HEADER: [&str; 21] = [
    "family",
    "variant",
    "measure",
    "hemisphere",
    "group",
    "first",
    "second",
    "method",
    "paired",
    "n_first",
    "n_second",
    "statistic",
    "p_two_sided",
    "p_less",
    "p_greater",
    "direction",
    "p_adjusted",
    "p_less_adjusted",
    "p_greater_adjusted",
    "significant",
    "error",
];

fn cell_record(c: &Cell) -> Vec<String> {
    vec![
        c.family.clone(),
        opt_name(c.variant, Variant::name),
        opt_name(c.measure, Measure::name),
        opt_name(c.hemisphere, Hemisphere::name),
        opt_name(c.group, Group::name),
        c.first.clone(),
        c.second.clone(),
        c.method.tag().to_string(),
        c.paired.to_string(),
        c.n_first.to_string(),
        c.n_second.to_string(),
        opt(&c.statistic),
        opt(&c.p_two_sided),
        opt(&c.p_less),
        opt(&c.p_greater),
        alt_name(c.direction),
        opt(&c.p_adjusted),
        opt(&c.p_less_adjusted),
        opt(&c.p_greater_adjusted),
        c.significant.to_string(),
        opt(&c.error),
    ]
}

impl StudyReport {
    /// Comment lines that make a CSV table reproducible on its own.
    pub fn header_lines(&self) -> Vec<String> {
        let config = serde_json::to_string(&self.config).unwrap_or_default();
        vec![format!("lcdm {}", self.version), format!("config={config}")]
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| MorphoError::Invalid(e.to_string()))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let io = |source| MorphoError::Io { path: path.display().to_string(), source };
        let mut f = File::create(path).map_err(io)?;
        f.write_all(self.to_json()?.as_bytes()).map_err(io)?;
        f.write_all(b"\n").map_err(io)
    }

    /// Tables as `(file name, header, rows)`.
    pub fn tables(&self) -> Vec<Table> {
        let strs = |h: &[&str]| h.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let cells = |cs: &[Cell]| cs.iter().map(cell_record).collect::<Vec<_>>();
        let mut out = Vec::new();
        out.push((
            "volumes.csv",
            strs(&["group", "n_subjects", "left_mean_mm3", "left_sd_mm3", "right_mean_mm3", "right_sd_mm3"]),
            self.volumes
                .iter()
                .map(|r| {
                    vec![
                        r.group.map(Group::name).unwrap_or("all").to_string(),
                        r.n_subjects.to_string(),
                        r.left_mean_mm3.to_string(),
                        opt(&r.left_sd_mm3),
                        r.right_mean_mm3.to_string(),
                        opt(&r.right_sd_mm3),
                    ]
                })
                .collect(),
        ));
        let d = |x: &Option<Descriptives>, f: fn(&Descriptives) -> f64| x.as_ref().map(f).map(|v| v.to_string()).unwrap_or_default();
        out.push((
            "subjects.csv",
            strs(&[
                "subject_id",
                "group",
                "twin_pair_id",
                "left_volume_mm3",
                "right_volume_mm3",
                "left_median_mm",
                "left_mode_mm",
                "left_range_mm",
                "left_variance_mm2",
                "right_median_mm",
                "right_mode_mm",
                "right_range_mm",
                "right_variance_mm2",
            ]),
            self.subjects
                .iter()
                .map(|s| {
                    vec![
                        s.subject_id.clone(),
                        s.group.name().to_string(),
                        opt(&s.twin_pair_id),
                        s.left_volume_mm3.to_string(),
                        s.right_volume_mm3.to_string(),
                        d(&s.left, |x| x.median_mm),
                        d(&s.left, |x| x.mode_mm),
                        d(&s.left, |x| x.range_mm),
                        d(&s.left, |x| x.variance_mm2),
                        d(&s.right, |x| x.median_mm),
                        d(&s.right, |x| x.mode_mm),
                        d(&s.right, |x| x.range_mm),
                        d(&s.right, |x| x.variance_mm2),
                    ]
                })
                .collect(),
        ));
        out.push(("measure_pairwise.csv", strs(&CELL_HEADER), cells(&self.measure_pairwise)));
        out.push(("measure_asymmetry.csv", strs(&CELL_HEADER), cells(&self.measure_asymmetry)));
        out.push((
            "correlations.csv",
            strs(&["family", "label", "group", "hemisphere", "n", "rho", "p_value", "p_adjusted", "significant", "error"]),
            self.correlations
                .iter()
                .map(|c| {
                    vec![
                        c.family.clone(),
                        c.label.clone(),
                        opt_name(c.group, Group::name),
                        opt_name(c.hemisphere, Hemisphere::name),
                        c.n.to_string(),
                        opt(&c.rho),
                        opt(&c.p_value),
                        opt(&c.p_adjusted),
                        c.significant.to_string(),
                        opt(&c.error),
                    ]
                })
                .collect(),
        ));
        out.push(("measure_cdf.csv", strs(&CELL_HEADER), cells(&self.measure_cdf)));
        out.push((
            "outliers.csv",
            strs(&["group", "hemisphere", "subject_id", "score", "threshold", "flagged"]),
            self.outliers
                .iter()
                .map(|o| {
                    vec![
                        o.group.name().to_string(),
                        o.hemisphere.name().to_string(),
                        o.subject_id.clone(),
                        o.score.to_string(),
                        o.threshold.to_string(),
                        o.flagged.to_string(),
                    ]
                })
                .collect(),
        ));
        out.push((
            "pooled_summary.csv",
            strs(&["variant", "group", "hemisphere", "n_subjects", "n", "mean_mm", "median_mm", "sd_mm"]),
            self.pooled_summary
                .iter()
                .map(|r| {
                    vec![
                        r.variant.name().to_string(),
                        r.group.map(Group::name).unwrap_or("all").to_string(),
                        r.hemisphere.name().to_string(),
                        r.n_subjects.to_string(),
                        r.n.to_string(),
                        r.mean_mm.to_string(),
                        r.median_mm.to_string(),
                        r.sd_mm.to_string(),
                    ]
                })
                .collect(),
        ));
        out.push(("pooled_location.csv", strs(&CELL_HEADER), cells(&self.pooled_location)));
        out.push(("pooled_hov.csv", strs(&CELL_HEADER), cells(&self.pooled_hov)));
        out.push(("pooled_asymmetry.csv", strs(&CELL_HEADER), cells(&self.pooled_asymmetry)));
        out.push(("pooled_cdf.csv", strs(&CELL_HEADER), cells(&self.pooled_cdf)));
        out.push((
            "stochastic_order.csv",
            strs(&["variant", "hemisphere", "first", "second", "p_less_adjusted", "p_greater_adjusted", "verdict"]),
            self.stochastic_order
                .iter()
                .map(|o| {
                    vec![
                        o.variant.name().to_string(),
                        o.hemisphere.name().to_string(),
                        o.first.name().to_string(),
                        o.second.name().to_string(),
                        o.p_less_adjusted.to_string(),
                        o.p_greater_adjusted.to_string(),
                        format!("{:?}", o.verdict),
                    ]
                })
                .collect(),
        ));
        out.push((
            "normality.csv",
            strs(&["variant", "group", "hemisphere", "n", "statistic", "p_value", "error"]),
            self.normality
                .iter()
                .map(|r| {
                    vec![
                        r.variant.name().to_string(),
                        r.group.name().to_string(),
                        r.hemisphere.name().to_string(),
                        r.n.to_string(),
                        opt(&r.statistic),
                        opt(&r.p_value),
                        opt(&r.error),
                    ]
                })
                .collect(),
        ));
        out
    }

    /// Writes one CSV per table into `dir` and returns the paths written.
    pub fn write_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let header = self.header_lines();
        let mut written = Vec::new();
        for (name, columns, rows) in self.tables() {
            let path = dir.join(name);
            let io = |source| MorphoError::Io { path: path.display().to_string(), source };
            let mut f = File::create(&path).map_err(io)?;
            for line in &header {
                writeln!(f, "# {line}").map_err(io)?;
            }
            let mut w = csv::Writer::from_writer(f);
            let csv_err = |e: csv::Error| MorphoError::Invalid(format!("{}: {e}", path.display()));
            w.write_record(&columns).map_err(csv_err)?;
            for row in rows {
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
            written.push(path);
        }
        Ok(written)
    }

    /// All comparison cells of the report.
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.measure_pairwise
            .iter()
            .chain(&self.measure_asymmetry)
            .chain(&self.measure_cdf)
            .chain(&self.pooled_location)
            .chain(&self.pooled_hov)
            .chain(&self.pooled_asymmetry)
            .chain(&self.pooled_cdf)
    }
}
