use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::measures::{filter_distances, subject_measures, volume_mm3};
use super::order::verdict;
use super::report::{
    Cell, CorrelationCell, FilterSummary, GroupVolumeRow, Measure, NormalityRow, OrderRow, OutlierRow, PooledSummaryRow,
    StudyReport, SubjectRow, Variant,
};
use super::{flag_outliers, Bandwidth, Group, Hemisphere, MorphoError, OutlierThreshold, Result, SubjectRecord};
use crate::npstats::{
    brown_forsythe_two_sample, holm_adjust, ks_two_sample, lilliefors, mean, median, paired_t, sample_variance,
    spearman, t_test, wilcoxon_rank_sum, wilcoxon_signed_rank, Alternative, Method, PMode, StatsError, TestResult,
};

/// Which subject sets the pooled analyses are run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMode {
    /// All subjects, then again with flagged subjects removed.
    #[default]
    Both,
    AllSubjectsOnly,
    RemovedOnly,
}

impl OutlierMode {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            OutlierMode::Both => vec![Variant::AllSubjects, Variant::OutliersRemoved],
            OutlierMode::AllSubjectsOnly => vec![Variant::AllSubjects],
            OutlierMode::RemovedOnly => vec![Variant::OutliersRemoved],
        }
    }
}

/// Settings of a study analysis. Every field has a default, so `{}` is a
/// valid JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Distances outside `[lo, hi]` mm are dropped before any analysis.
    pub bounds: [f64; 2],
    pub voxel_mm: [f64; 3],
    pub alpha: f64,
    /// Groups the study is expected to contain; each must have subjects.
    pub groups: Vec<Group>,
    /// Extra input labels mapped to groups, e.g. `{"patient": "MDD"}`.
    pub group_labels: BTreeMap<String, Group>,
    /// Compare MDD and HR subject measures with paired tests across twin links.
    pub paired: bool,
    pub rank_mode: PMode,
    pub bandwidth: Bandwidth,
    pub outlier_threshold: OutlierThreshold,
    /// `AllSubjectsOnly` also skips the outlier screening.
    pub outlier_mode: OutlierMode,
    /// Subjects to remove in the outlier-removed variant instead of the
    /// screened ones.
    pub exclude: Option<Vec<String>>,
    /// Simulation size of the Lilliefors p-values; 0 skips normality tests.
    pub normality_replicates: usize,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            bounds: [super::DEFAULT_BOUNDS.0, super::DEFAULT_BOUNDS.1],
            voxel_mm: [0.5; 3],
            alpha: 0.05,
            groups: Group::ALL.to_vec(),
            group_labels: BTreeMap::new(),
            paired: true,
            rank_mode: PMode::Auto,
            bandwidth: Bandwidth::Silverman,
            outlier_threshold: OutlierThreshold::default(),
            outlier_mode: OutlierMode::Both,
            exclude: None,
            normality_replicates: 200,
            seed: 0,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.bounds;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(MorphoError::InvalidBounds { lo, hi });
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(MorphoError::Invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.voxel_mm.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(MorphoError::Invalid(format!("voxel size must be positive, got {:?}", self.voxel_mm)));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(MorphoError::InvalidBandwidth(h));
            }
        }
        let distinct: BTreeSet<Group> = self.groups.iter().copied().collect();
        if distinct.len() < 2 {
            return Err(MorphoError::TooFewGroups(distinct.len()));
        }
        Ok(())
    }

    fn study_groups(&self) -> Vec<Group> {
        Group::ALL.into_iter().filter(|g| self.groups.contains(g)).collect()
    }
}

/// Concatenated distances of one group and hemisphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledSample {
    pub group: Group,
    pub hemisphere: Hemisphere,
    pub values: Vec<f64>,
    pub subjects: Vec<String>,
}

/// Pools the samples of the non-excluded subjects of `group`, concatenated in
/// subject-id order.
pub fn pool(
    subjects: &[SubjectRecord],
    group: Group,
    hemisphere: Hemisphere,
    exclude: &BTreeSet<String>,
) -> Result<PooledSample> {
    let mut chosen: Vec<&SubjectRecord> =
        subjects.iter().filter(|s| s.group == group && !exclude.contains(&s.subject_id)).collect();
    if chosen.is_empty() {
        return Err(MorphoError::EmptyPool { group, hemisphere });
    }
    chosen.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(PooledSample {
        group,
        hemisphere,
        values: chosen.iter().flat_map(|s| s.sample(hemisphere).iter().copied()).collect(),
        subjects: chosen.iter().map(|s| s.subject_id.clone()).collect(),
    })
}

/// Labels of a cell, filled in before the tests run.
#[derive(Clone, Default)]
struct CellSpec {
    family: String,
    variant: Option<Variant>,
    measure: Option<Measure>,
    hemisphere: Option<Hemisphere>,
    group: Option<Group>,
    first: String,
    second: String,
    paired: bool,
}

/// Runs `test` for all three alternatives and records the outcome.
fn tails_cell(
    spec: CellSpec,
    nominal: Method,
    n: (usize, usize),
    test: impl Fn(Alternative) -> std::result::Result<TestResult, StatsError>,
) -> Cell {
    let outcome = (|| Ok::<_, StatsError>((test(Alternative::TwoSided)?, test(Alternative::Less)?, test(Alternative::Greater)?)))();
    let mut cell = Cell {
        family: spec.family,
        variant: spec.variant,
        measure: spec.measure,
        hemisphere: spec.hemisphere,
        group: spec.group,
        first: spec.first,
        second: spec.second,
        method: nominal,
        paired: spec.paired,
        n_first: n.0,
        n_second: n.1,
        statistic: None,
        p_two_sided: None,
        p_less: None,
        p_greater: None,
        direction: None,
        p_adjusted: None,
        p_less_adjusted: None,
        p_greater_adjusted: None,
        significant: false,
        error: None,
    };
    match outcome {
        Ok((two, less, greater)) => {
            cell.method = two.method;
            cell.statistic = Some(two.statistic);
            cell.p_two_sided = Some(two.p_value);
            cell.p_less = Some(less.p_value);
            cell.p_greater = Some(greater.p_value);
            cell.direction = if less.p_value < greater.p_value {
                Some(Alternative::Less)
            } else if greater.p_value < less.p_value {
                Some(Alternative::Greater)
            } else {
                None
            };
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

fn holm_in_place(values: Vec<(usize, f64)>, mut set: impl FnMut(usize, f64)) {
    let raw: Vec<f64> = values.iter().map(|&(_, p)| p).collect();
    if let Ok(adj) = holm_adjust(&raw) {
        for (&(i, _), a) in values.iter().zip(adj) {
            set(i, a);
        }
    }
}

/// Holm-adjusts the two-sided p-values within each family; KS families also
/// get their one-sided p-values adjusted, one alternative at a time.
fn adjust_families(cells: &mut [Cell], alpha: f64) {
    let mut families: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        families.entry(c.family.clone()).or_default().push(i);
    }
    for members in families.values() {
        let pick = |f: fn(&Cell) -> Option<f64>| -> Vec<(usize, f64)> {
            members.iter().filter_map(|&i| f(&cells[i]).map(|p| (i, p))).collect()
        };
        let (two, less, greater) = (pick(|c| c.p_two_sided), pick(|c| c.p_less), pick(|c| c.p_greater));
        holm_in_place(two, |i, a| {
            cells[i].p_adjusted = Some(a);
            cells[i].significant = a < alpha;
        });
        if members.iter().any(|&i| cells[i].method == Method::KolmogorovSmirnov) {
            holm_in_place(less, |i, a| cells[i].p_less_adjusted = Some(a));
            holm_in_place(greater, |i, a| cells[i].p_greater_adjusted = Some(a));
        }
    }
}

fn adjust_correlations(cells: &mut [CorrelationCell], alpha: f64) {
    let mut families: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        families.entry(c.family.clone()).or_default().push(i);
    }
    for members in families.values() {
        let ps: Vec<(usize, f64)> = members.iter().filter_map(|&i| cells[i].p_value.map(|p| (i, p))).collect();
        holm_in_place(ps, |i, a| {
            cells[i].p_adjusted = Some(a);
            cells[i].significant = a < alpha;
        });
    }
}

fn correlation_cell(family: &str, label: String, group: Option<Group>, hemisphere: Option<Hemisphere>, x: &[f64], y: &[f64]) -> CorrelationCell {
    let mut cell = CorrelationCell {
        family: family.to_string(),
        label,
        group,
        hemisphere,
        n: x.len(),
        rho: None,
        p_value: None,
        p_adjusted: None,
        significant: false,
        error: None,
    };
    match spearman(x, y) {
        Ok((rho, r)) => {
            cell.rho = Some(rho);
            cell.p_value = Some(r.p_value);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

fn group_pairs(groups: &[Group]) -> Vec<(Group, Group)> {
    let mut pairs = Vec::new();
    for (i, &a) in groups.iter().enumerate() {
        for &b in &groups[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

fn measure_value(row: &SubjectRow, h: Hemisphere, m: Measure) -> Option<f64> {
    let (volume, d) = match h {
        Hemisphere::Left => (row.left_volume_mm3, &row.left),
        Hemisphere::Right => (row.right_volume_mm3, &row.right),
    };
    match m {
        Measure::Volume => Some(volume),
        Measure::Median => d.as_ref().map(|d| d.median_mm),
        Measure::Mode => d.as_ref().map(|d| d.mode_mm),
        Measure::Range => d.as_ref().map(|d| d.range_mm),
        Measure::Variance => d.as_ref().map(|d| d.variance_mm2),
    }
}

fn sd(xs: &[f64]) -> Option<f64> {
    (xs.len() >= 2).then(|| sample_variance(xs).sqrt())
}

/// Checks subject ids and groups, dropping subjects outside the configured
/// groups. Returns the kept records sorted by subject id.
fn checked_subjects(subjects: &[SubjectRecord], groups: &[Group], warnings: &mut Vec<String>) -> Result<Vec<SubjectRecord>> {
    let mut seen: BTreeMap<&str, Group> = BTreeMap::new();
    for s in subjects {
        if let Some(&g) = seen.get(s.subject_id.as_str()) {
            return Err(if g == s.group {
                MorphoError::Invalid(format!("subject {} is listed twice", s.subject_id))
            } else {
                MorphoError::ConflictingGroup { subject: s.subject_id.clone(), first: g, second: s.group }
            });
        }
        seen.insert(&s.subject_id, s.group);
    }
    let mut kept: Vec<SubjectRecord> = Vec::new();
    for s in subjects {
        if groups.contains(&s.group) {
            kept.push(s.clone());
        } else {
            warnings.push(format!("subject {} ({}) is outside the configured groups and was skipped", s.subject_id, s.group));
        }
    }
    for &g in groups {
        if !kept.iter().any(|s| s.group == g) {
            return Err(MorphoError::EmptyGroup(g));
        }
    }
    kept.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(kept)
}

/// Links each MDD subject to its HR co-twin. Returns `(mdd, hr)` index pairs
/// into `subjects`, ordered by pair id.
fn twin_links(subjects: &[SubjectRecord]) -> Result<Vec<(usize, usize)>> {
    let mut pairs: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, s) in subjects.iter().enumerate() {
        if !matches!(s.group, Group::Mdd | Group::Hr) {
            continue;
        }
        let id = s
            .twin_pair_id
            .as_deref()
            .ok_or_else(|| MorphoError::MissingPairLink(format!("subject {} has no twin_pair_id", s.subject_id)))?;
        let entry = pairs.entry(id).or_default();
        if s.group == Group::Mdd {
            entry.0.push(i);
        } else {
            entry.1.push(i);
        }
    }
    pairs
        .into_iter()
        .map(|(id, (m, h))| match (m.as_slice(), h.as_slice()) {
            ([a], [b]) => Ok((*a, *b)),
            _ => Err(MorphoError::MissingPairLink(format!(
                "pair {id} has {} MDD and {} HR subjects, expected one of each",
                m.len(),
                h.len()
            ))),
        })
        .collect()
}

struct VariantOutput {
    summary: Vec<PooledSummaryRow>,
    location: Vec<Cell>,
    hov: Vec<Cell>,
    asymmetry: Vec<Cell>,
    cdf: Vec<Cell>,
    normality: Vec<NormalityRow>,
    warnings: Vec<String>,
}

fn pooled_analyses(
    subjects: &[SubjectRecord],
    groups: &[Group],
    variant: Variant,
    exclude: &BTreeSet<String>,
    config: &StudyConfig,
) -> VariantOutput {
    let mut warnings = Vec::new();
    let mut pools: BTreeMap<(Group, Hemisphere), PooledSample> = BTreeMap::new();
    for &g in groups {
        for h in Hemisphere::BOTH {
            match pool(subjects, g, h, exclude) {
                Ok(p) if p.values.is_empty() => {
                    warnings.push(format!("{}: pooled {g} {h} sample is empty after filtering", variant.name()))
                }
                Ok(p) => {
                    pools.insert((g, h), p);
                }
                Err(e) => warnings.push(format!("{}: {e}", variant.name())),
            }
        }
    }
    let overall: BTreeMap<Hemisphere, Vec<f64>> = Hemisphere::BOTH
        .into_iter()
        .map(|h| {
            let vals = groups.iter().filter_map(|&g| pools.get(&(g, h))).flat_map(|p| p.values.iter().copied()).collect();
            (h, vals)
        })
        .collect();

    let mut summary = Vec::new();
    for h in Hemisphere::BOTH {
        let rows = groups
            .iter()
            .filter_map(|&g| pools.get(&(g, h)).map(|p| (Some(g), p.subjects.len(), p.values.as_slice())))
            .chain(std::iter::once((None, overall_subjects(&pools, h), overall[&h].as_slice())));
        for (group, n_subjects, values) in rows {
            if values.is_empty() {
                continue;
            }
            summary.push(PooledSummaryRow {
                variant,
                group,
                hemisphere: h,
                n_subjects,
                n: values.len(),
                mean_mm: mean(values),
                median_mm: median(values),
                sd_mm: sd(values).unwrap_or(0.0),
            });
        }
    }

    let spec = |family: String, h: Hemisphere, a: &str, b: &str| CellSpec {
        family,
        variant: Some(variant),
        hemisphere: Some(h),
        first: a.to_string(),
        second: b.to_string(),
        ..CellSpec::default()
    };
    let v = variant.name();
    let jobs: Vec<(Hemisphere, Group, Group)> = Hemisphere::BOTH
        .into_iter()
        .flat_map(|h| group_pairs(groups).into_iter().map(move |(a, b)| (h, a, b)))
        .filter(|(h, a, b)| pools.contains_key(&(*a, *h)) && pools.contains_key(&(*b, *h)))
        .collect();
    let pair_cells: Vec<[Cell; 4]> = jobs
        .par_iter()
        .map(|&(h, a, b)| {
            let (x, y) = (&pools[&(a, h)].values, &pools[&(b, h)].values);
            let n = (x.len(), y.len());
            let (an, bn) = (a.name(), b.name());
            [
                tails_cell(spec(format!("pooled_location/{v}/{h}/rank"), h, an, bn), Method::RankSumAsymptotic, n, |alt| {
                    wilcoxon_rank_sum(x, y, alt, config.rank_mode)
                }),
                tails_cell(spec(format!("pooled_location/{v}/{h}/t"), h, an, bn), Method::WelchT, n, |alt| t_test(x, y, alt)),
                tails_cell(spec(format!("pooled_hov/{v}/{h}"), h, an, bn), Method::BrownForsythe, n, |alt| {
                    brown_forsythe_two_sample(x, y, alt)
                }),
                tails_cell(spec(format!("pooled_cdf/{v}/{h}"), h, an, bn), Method::KolmogorovSmirnov, n, |alt| {
                    ks_two_sample(x, y, alt)
                }),
            ]
        })
        .collect();
    let (mut location, mut hov, mut cdf) = (Vec::new(), Vec::new(), Vec::new());
    for [w, t, bf, ks] in pair_cells {
        location.extend([w, t]);
        hov.push(bf);
        cdf.push(ks);
    }

    let subsets: Vec<Option<Group>> = std::iter::once(None).chain(groups.iter().map(|&g| Some(g))).collect();
    let asymmetry: Vec<Cell> = subsets
        .par_iter()
        .flat_map_iter(|&subset| {
            let side = |h: Hemisphere| match subset {
                None => Some(overall[&h].as_slice()),
                Some(g) => pools.get(&(g, h)).map(|p| p.values.as_slice()),
            };
            let scope = if subset.is_some() { "groups" } else { "overall" };
            let mk = |family: String| CellSpec {
                family,
                variant: Some(variant),
                group: subset,
                first: "L".into(),
                second: "R".into(),
                ..CellSpec::default()
            };
            match (side(Hemisphere::Left), side(Hemisphere::Right)) {
                (Some(l), Some(r)) if !l.is_empty() && !r.is_empty() => {
                    let n = (l.len(), r.len());
                    vec![
                        tails_cell(mk(format!("pooled_asymmetry/{v}/rank/{scope}")), Method::RankSumAsymptotic, n, |alt| {
                            wilcoxon_rank_sum(l, r, alt, config.rank_mode)
                        }),
                        tails_cell(mk(format!("pooled_asymmetry/{v}/t/{scope}")), Method::WelchT, n, |alt| t_test(l, r, alt)),
                    ]
                }
                _ => Vec::new(),
            }
        })
        .collect();

    let mut normality = Vec::new();
    if config.normality_replicates > 0 {
        let variant_offset = match variant {
            Variant::AllSubjects => 0u64,
            Variant::OutliersRemoved => 1000,
        };
        for (gi, &g) in groups.iter().enumerate() {
            for (hi, h) in Hemisphere::BOTH.into_iter().enumerate() {
                let Some(p) = pools.get(&(g, h)) else { continue };
                let seed = config.seed.wrapping_add(variant_offset + 2 * gi as u64 + hi as u64);
                let mut row =
                    NormalityRow { variant, group: g, hemisphere: h, n: p.values.len(), statistic: None, p_value: None, error: None };
                match lilliefors(&p.values, config.normality_replicates, seed) {
                    Ok(r) => {
                        row.statistic = Some(r.statistic);
                        row.p_value = Some(r.p_value);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                normality.push(row);
            }
        }
    }

    VariantOutput { summary, location, hov, asymmetry, cdf, normality, warnings }
}

fn overall_subjects(pools: &BTreeMap<(Group, Hemisphere), PooledSample>, h: Hemisphere) -> usize {
    pools.iter().filter(|((_, ph), _)| *ph == h).map(|(_, p)| p.subjects.len()).sum()
}

/// Runs the complete analysis on a study. The report only depends on the
/// subjects and the config, whatever the order of the input records.
pub fn run_study(subjects: &[SubjectRecord], config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let groups = config.study_groups();
    let mut warnings = Vec::new();
    let raw = checked_subjects(subjects, &groups, &mut warnings)?;
    let [lo, hi] = config.bounds;

    let mut filtering = Vec::new();
    let mut filtered = Vec::with_capacity(raw.len());
    let mut rows = Vec::with_capacity(raw.len());
    for s in &raw {
        let l = filter_distances(&s.left, lo, hi)?;
        let r = filter_distances(&s.right, lo, hi)?;
        for (h, f) in [(Hemisphere::Left, &l), (Hemisphere::Right, &r)] {
            filtering.push(FilterSummary {
                subject_id: s.subject_id.clone(),
                group: s.group,
                hemisphere: h,
                kept: f.values.len(),
                below: f.below,
                above: f.above,
            });
        }
        let desc = |f: &super::Filtered, h: Hemisphere, warnings: &mut Vec<String>| match subject_measures(&f.values, config.voxel_mm) {
            Ok(m) => Some(m.descriptives),
            Err(e) => {
                warnings.push(format!("subject {} {h}: descriptives skipped: {e}", s.subject_id));
                None
            }
        };
        rows.push(SubjectRow {
            subject_id: s.subject_id.clone(),
            group: s.group,
            twin_pair_id: s.twin_pair_id.clone(),
            left_volume_mm3: volume_mm3(l.values.len(), config.voxel_mm),
            right_volume_mm3: volume_mm3(r.values.len(), config.voxel_mm),
            left: desc(&l, Hemisphere::Left, &mut warnings),
            right: desc(&r, Hemisphere::Right, &mut warnings),
        });
        filtered.push(SubjectRecord { left: l.values, right: r.values, ..s.clone() });
    }

    let has_twins = config.paired && groups.contains(&Group::Mdd) && groups.contains(&Group::Hr);
    let twins = if has_twins { twin_links(&filtered)? } else { Vec::new() };

    let volumes = volume_rows(&rows, &groups);
    let pairs = group_pairs(&groups);
    let members = |g: Group| rows.iter().filter(move |r| r.group == g);

    let mut measure_pairwise = Vec::new();
    let mut measure_cdf = Vec::new();
    for m in Measure::ALL {
        for h in Hemisphere::BOTH {
            for &(a, b) in &pairs {
                let mut spec = CellSpec {
                    measure: Some(m),
                    hemisphere: Some(h),
                    first: a.name().into(),
                    second: b.name().into(),
                    ..CellSpec::default()
                };
                let fam = |kind: &str| format!("measure_pairwise/{}/{h}/{kind}", m.name());
                if has_twins && (a, b) == (Group::Mdd, Group::Hr) {
                    let diffs: Vec<f64> = twins
                        .iter()
                        .filter_map(|&(i, j)| Some(measure_value(&rows[i], h, m)? - measure_value(&rows[j], h, m)?))
                        .collect();
                    let n = (diffs.len(), diffs.len());
                    spec.paired = true;
                    measure_pairwise.push(tails_cell(
                        CellSpec { family: fam("rank"), ..spec.clone() },
                        Method::SignedRankAsymptotic,
                        n,
                        |alt| wilcoxon_signed_rank(&diffs, alt, config.rank_mode),
                    ));
                    measure_pairwise.push(tails_cell(CellSpec { family: fam("t"), ..spec.clone() }, Method::PairedT, n, |alt| {
                        paired_t(&diffs, alt)
                    }));
                } else {
                    let x: Vec<f64> = members(a).filter_map(|r| measure_value(r, h, m)).collect();
                    let y: Vec<f64> = members(b).filter_map(|r| measure_value(r, h, m)).collect();
                    let n = (x.len(), y.len());
                    measure_pairwise.push(tails_cell(
                        CellSpec { family: fam("rank"), ..spec.clone() },
                        Method::RankSumAsymptotic,
                        n,
                        |alt| wilcoxon_rank_sum(&x, &y, alt, config.rank_mode),
                    ));
                    measure_pairwise.push(tails_cell(CellSpec { family: fam("t"), ..spec.clone() }, Method::WelchT, n, |alt| {
                        t_test(&x, &y, alt)
                    }));
                }
                if m == Measure::Volume {
                    let x: Vec<f64> = members(a).map(|r| measure_value(r, h, m).unwrap_or(0.0)).collect();
                    let y: Vec<f64> = members(b).map(|r| measure_value(r, h, m).unwrap_or(0.0)).collect();
                    measure_cdf.push(tails_cell(
                        CellSpec { family: format!("measure_cdf/volume/{h}"), ..spec.clone() },
                        Method::KolmogorovSmirnov,
                        (x.len(), y.len()),
                        |alt| ks_two_sample(&x, &y, alt),
                    ));
                }
            }
        }
    }

    let mut measure_asymmetry = Vec::new();
    let subsets: Vec<Option<Group>> = std::iter::once(None).chain(groups.iter().map(|&g| Some(g))).collect();
    for m in Measure::ALL {
        for &subset in &subsets {
            let diffs: Vec<f64> = rows
                .iter()
                .filter(|r| subset.is_none_or(|g| r.group == g))
                .filter_map(|r| Some(measure_value(r, Hemisphere::Left, m)? - measure_value(r, Hemisphere::Right, m)?))
                .collect();
            let scope = if subset.is_some() { "groups" } else { "overall" };
            let spec = |kind: &str| CellSpec {
                family: format!("measure_asymmetry/{}/{kind}/{scope}", m.name()),
                measure: Some(m),
                group: subset,
                first: "L".into(),
                second: "R".into(),
                paired: true,
                ..CellSpec::default()
            };
            let n = (diffs.len(), diffs.len());
            measure_asymmetry.push(tails_cell(spec("rank"), Method::SignedRankAsymptotic, n, |alt| {
                wilcoxon_signed_rank(&diffs, alt, config.rank_mode)
            }));
            measure_asymmetry.push(tails_cell(spec("t"), Method::PairedT, n, |alt| paired_t(&diffs, alt)));
        }
    }

    let mut correlations = Vec::new();
    for &subset in &subsets {
        let sel: Vec<&SubjectRow> = rows.iter().filter(|r| subset.is_none_or(|g| r.group == g)).collect();
        let l: Vec<f64> = sel.iter().map(|r| r.left_volume_mm3).collect();
        let r: Vec<f64> = sel.iter().map(|r| r.right_volume_mm3).collect();
        let (family, label) = match subset {
            None => ("correlation/lr/overall", "L vs R volume (all)".to_string()),
            Some(g) => ("correlation/lr/groups", format!("L vs R volume ({g})")),
        };
        correlations.push(correlation_cell(family, label, subset, None, &l, &r));
    }
    if has_twins {
        for h in Hemisphere::BOTH {
            let x: Vec<f64> = twins.iter().map(|&(i, _)| measure_value(&rows[i], h, Measure::Volume).unwrap_or(0.0)).collect();
            let y: Vec<f64> = twins.iter().map(|&(_, j)| measure_value(&rows[j], h, Measure::Volume).unwrap_or(0.0)).collect();
            correlations.push(correlation_cell("correlation/twins", format!("MDD{h} vs HR{h} volume"), None, Some(h), &x, &y));
        }
    }

    let mut outliers = Vec::new();
    let mut flagged = BTreeSet::new();
    let screen = config.outlier_mode != OutlierMode::AllSubjectsOnly;
    for &g in groups.iter().filter(|_| screen) {
        for h in Hemisphere::BOTH {
            let samples: Vec<(String, &[f64])> = filtered
                .iter()
                .filter(|s| s.group == g && !s.sample(h).is_empty())
                .map(|s| (s.subject_id.clone(), s.sample(h)))
                .collect();
            match flag_outliers(&samples, config.bandwidth, config.outlier_threshold) {
                Ok(scores) => {
                    for (id, score) in scores.subject_ids.iter().zip(&scores.scores) {
                        let is_flagged = scores.flagged.contains(id);
                        if is_flagged {
                            flagged.insert(id.clone());
                        }
                        outliers.push(OutlierRow {
                            group: g,
                            hemisphere: h,
                            subject_id: id.clone(),
                            score: *score,
                            threshold: scores.threshold,
                            flagged: is_flagged,
                        });
                    }
                }
                Err(e) => warnings.push(format!("outlier screening skipped for {g} {h}: {e}")),
            }
        }
    }
    let excluded: BTreeSet<String> = match &config.exclude {
        Some(ids) => {
            for id in ids {
                if !filtered.iter().any(|s| &s.subject_id == id) {
                    warnings.push(format!("excluded subject {id} is not in the study"));
                }
            }
            ids.iter().cloned().collect()
        }
        None => flagged,
    };

    let variants = config.outlier_mode.variants();
    let outputs: Vec<VariantOutput> = variants
        .par_iter()
        .map(|&v| {
            let exclude = match v {
                Variant::AllSubjects => BTreeSet::new(),
                Variant::OutliersRemoved => excluded.clone(),
            };
            pooled_analyses(&filtered, &groups, v, &exclude, config)
        })
        .collect();

    let mut report = StudyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        groups: groups.clone(),
        excluded_subjects: excluded.into_iter().collect(),
        filtering,
        subjects: rows.clone(),
        volumes,
        measure_pairwise,
        measure_asymmetry,
        correlations,
        measure_cdf,
        outliers,
        pooled_summary: Vec::new(),
        pooled_location: Vec::new(),
        pooled_hov: Vec::new(),
        pooled_asymmetry: Vec::new(),
        pooled_cdf: Vec::new(),
        stochastic_order: Vec::new(),
        normality: Vec::new(),
        warnings,
    };
    for out in outputs {
        report.pooled_summary.extend(out.summary);
        report.pooled_location.extend(out.location);
        report.pooled_hov.extend(out.hov);
        report.pooled_asymmetry.extend(out.asymmetry);
        report.pooled_cdf.extend(out.cdf);
        report.normality.extend(out.normality);
        report.warnings.extend(out.warnings);
    }
    let alpha = config.alpha;
    for cells in [
        &mut report.measure_pairwise,
        &mut report.measure_asymmetry,
        &mut report.measure_cdf,
        &mut report.pooled_location,
        &mut report.pooled_hov,
        &mut report.pooled_asymmetry,
        &mut report.pooled_cdf,
    ] {
        adjust_families(cells, alpha);
    }
    adjust_correlations(&mut report.correlations, alpha);
    report.stochastic_order = report
        .pooled_cdf
        .iter()
        .filter_map(|c| {
            let (pl, pg) = (c.p_less_adjusted?, c.p_greater_adjusted?);
            Some(OrderRow {
                variant: c.variant?,
                hemisphere: c.hemisphere?,
                first: c.first.parse().ok()?,
                second: c.second.parse().ok()?,
                p_less_adjusted: pl,
                p_greater_adjusted: pg,
                verdict: verdict(pl < alpha, pg < alpha),
            })
        })
        .collect();
    let failed: Vec<String> = report
        .cells()
        .filter_map(|c| c.error.as_ref().map(|e| format!("{} {} vs {}: {e}", c.family, c.first, c.second)))
        .chain(report.correlations.iter().filter_map(|c| c.error.as_ref().map(|e| format!("{} {}: {e}", c.family, c.label))))
        .collect();
    report.warnings.extend(failed);
    Ok(report)
}

fn volume_rows(rows: &[SubjectRow], groups: &[Group]) -> Vec<GroupVolumeRow> {
    let subsets = groups.iter().map(|&g| Some(g)).chain(std::iter::once(None));
    subsets
        .map(|subset| {
            let sel: Vec<&SubjectRow> = rows.iter().filter(|r| subset.is_none_or(|g| r.group == g)).collect();
            let l: Vec<f64> = sel.iter().map(|r| r.left_volume_mm3).collect();
            let r: Vec<f64> = sel.iter().map(|r| r.right_volume_mm3).collect();
            GroupVolumeRow {
                group: subset,
                n_subjects: sel.len(),
                left_mean_mm3: mean(&l),
                left_sd_mm3: sd(&l),
                right_mean_mm3: mean(&r),
                right_sd_mm3: sd(&r),
            }
        })
        .collect()
}
