use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::synth::{synthetic_study, SynthSpec};
use super::*;
use crate::npstats::Alternative;
use crate::simkit::AltParams;

fn quick_config() -> StudyConfig {
    StudyConfig { normality_replicates: 0, ..StudyConfig::default() }
}

#[test]
fn pool_examples() {
    let subjects = vec![
        SubjectRecord::new("b", Group::Mdd, vec![3.0], vec![]),
        SubjectRecord::new("a", Group::Mdd, vec![1.0, 2.0], vec![]),
        SubjectRecord::new("c", Group::Ctrl, vec![9.0], vec![]),
    ];
    let none = BTreeSet::new();
    let p = pool(&subjects, Group::Mdd, Hemisphere::Left, &none).unwrap();
    assert_eq!(p.values, vec![1.0, 2.0, 3.0]);
    assert_eq!(p.subjects, vec!["a", "b"]);
    let only_b = pool(&subjects, Group::Mdd, Hemisphere::Left, &BTreeSet::from(["a".to_string()])).unwrap();
    assert_eq!(only_b.values, vec![3.0]);
    let all = BTreeSet::from(["a".to_string(), "b".to_string()]);
    assert!(matches!(pool(&subjects, Group::Mdd, Hemisphere::Left, &all), Err(MorphoError::EmptyPool { .. })));
}

#[test]
fn missing_group_is_an_error() {
    let mut subjects = synthetic_study(&SynthSpec::null(4, 200), 1).unwrap();
    subjects.retain(|s| s.group != Group::Hr);
    let err = run_study(&subjects, &quick_config()).unwrap_err();
    assert!(matches!(err, MorphoError::EmptyGroup(Group::Hr)), "{err}");
    let two = StudyConfig { groups: vec![Group::Mdd, Group::Ctrl], ..quick_config() };
    assert!(run_study(&subjects, &two).is_ok());
    let one = StudyConfig { groups: vec![Group::Mdd], ..quick_config() };
    assert!(matches!(run_study(&subjects, &one), Err(MorphoError::TooFewGroups(1))));
}

#[test]
fn paired_tests_need_twin_links() {
    let mut subjects = synthetic_study(&SynthSpec::null(4, 200), 2).unwrap();
    subjects.iter_mut().find(|s| s.group == Group::Hr).unwrap().twin_pair_id = None;
    assert!(matches!(run_study(&subjects, &quick_config()), Err(MorphoError::MissingPairLink(_))));
    let unpaired = StudyConfig { paired: false, ..quick_config() };
    let report = run_study(&subjects, &unpaired).unwrap();
    assert!(report.measure_pairwise.iter().all(|c| !c.paired));
}

#[test]
fn conflicting_subject_groups_are_rejected() {
    let mut subjects = synthetic_study(&SynthSpec::null(3, 100), 3).unwrap();
    let mut dup = subjects[0].clone();
    dup.group = Group::Ctrl;
    subjects.push(dup);
    assert!(matches!(run_study(&subjects, &quick_config()), Err(MorphoError::ConflictingGroup { .. })));
}

#[test]
fn report_is_deterministic_and_order_free() {
    let subjects = synthetic_study(&SynthSpec::null(5, 300), 4).unwrap();
    let config = StudyConfig { normality_replicates: 50, seed: 9, ..StudyConfig::default() };
    let a = run_study(&subjects, &config).unwrap().to_json().unwrap();
    let mut reversed = subjects.clone();
    reversed.reverse();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = single.install(|| run_study(&reversed, &config).unwrap().to_json().unwrap());
    assert_eq!(a, b);
}

#[test]
fn report_structure() {
    let subjects = synthetic_study(&SynthSpec::null(5, 300), 5).unwrap();
    let r = run_study(&subjects, &quick_config()).unwrap();
    // 5 measures × 2 hemispheres × 3 pairs × (rank, t)
    assert_eq!(r.measure_pairwise.len(), 60);
    let mdd_hr = r.measure_pairwise.iter().filter(|c| c.first == "MDD" && c.second == "HR");
    assert!(mdd_hr.clone().all(|c| c.paired && c.n_first == 5));
    // overall + 3 groups, 5 measures, 2 methods
    assert_eq!(r.measure_asymmetry.len(), 40);
    assert_eq!(r.correlations.len(), 6);
    for v in [Variant::AllSubjects, Variant::OutliersRemoved] {
        assert_eq!(r.pooled_location.iter().filter(|c| c.variant == Some(v)).count(), 12);
        assert_eq!(r.pooled_cdf.iter().filter(|c| c.variant == Some(v)).count(), 6);
        assert_eq!(r.stochastic_order.iter().filter(|o| o.variant == v).count(), 6);
    }
    let n_left: usize = r.subjects.iter().map(|s| (s.left_volume_mm3 / 0.125).round() as usize).sum();
    let pooled_left: usize = r
        .pooled_summary
        .iter()
        .filter(|p| p.variant == Variant::AllSubjects && p.hemisphere == Hemisphere::Left && p.group.is_none())
        .map(|p| p.n)
        .sum();
    assert_eq!(n_left, pooled_left);
    assert!(r.cells().all(|c| c.error.is_none()), "{:?}", r.warnings);
    let excluded: BTreeSet<&str> = r.outliers.iter().filter(|o| o.flagged).map(|o| o.subject_id.as_str()).collect();
    assert_eq!(r.excluded_subjects.iter().map(String::as_str).collect::<BTreeSet<_>>(), excluded);
}

#[test]
fn holm_adjustment_invariants() {
    let subjects = synthetic_study(&SynthSpec::null(6, 400).with_params(Group::Ctrl, AltParams::new(1.1, 0).unwrap()), 6).unwrap();
    let r = run_study(&subjects, &quick_config()).unwrap();
    let mut families: BTreeMap<&str, Vec<&Cell>> = BTreeMap::new();
    for c in r.cells() {
        families.entry(c.family.as_str()).or_default().push(c);
    }
    for cells in families.values() {
        let mut pairs: Vec<(f64, f64)> = cells.iter().map(|c| (c.p_two_sided.unwrap(), c.p_adjusted.unwrap())).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
        assert!(pairs.iter().all(|&(raw, adj)| adj >= raw && adj <= 1.0));
    }
    for c in &r.pooled_cdf {
        assert!(c.p_less_adjusted.unwrap() >= c.p_less.unwrap());
        assert!(c.p_greater_adjusted.unwrap() >= c.p_greater.unwrap());
    }
}

#[test]
fn detects_wider_control_group() {
    let spec = SynthSpec::null(12, 2000).with_params(Group::Ctrl, AltParams::new(1.2, 0).unwrap());
    let subjects = synthetic_study(&spec, 7).unwrap();
    let config = StudyConfig { outlier_mode: OutlierMode::AllSubjectsOnly, ..quick_config() };
    let r = run_study(&subjects, &config).unwrap();
    let cell = r
        .pooled_location
        .iter()
        .find(|c| c.first == "MDD" && c.second == "Ctrl" && c.hemisphere == Some(Hemisphere::Left) && c.family.ends_with("rank"))
        .unwrap();
    assert!(cell.significant, "{cell:?}");
    assert_eq!(cell.direction, Some(Alternative::Less));
    let order = r
        .stochastic_order
        .iter()
        .find(|o| o.first == Group::Mdd && o.second == Group::Ctrl && o.hemisphere == Hemisphere::Left)
        .unwrap();
    assert_eq!(order.verdict, OrderVerdict::FirstStochasticallySmaller);
}

#[test]
fn tables_written_with_headers() {
    let subjects = synthetic_study(&SynthSpec::null(4, 200), 8).unwrap();
    let r = run_study(&subjects, &quick_config()).unwrap();
    let dir = std::env::temp_dir().join(format!("lcdm-report-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let files = r.write_tables(&dir).unwrap();
    assert!(files.iter().any(|p| p.ends_with("pooled_cdf.csv")));
    let text = std::fs::read_to_string(dir.join("pooled_location.csv")).unwrap();
    assert!(text.starts_with("# lcdm "));
    assert!(text.contains("\"alpha\":0.05"));
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pooled_length_is_sum_of_subject_lengths(seed in any::<u64>(), n_sub in 1usize..6, n in 5usize..60, drop in 0usize..3) {
        let subjects = synthetic_study(&SynthSpec::null(n_sub, n), seed).unwrap();
        let exclude: BTreeSet<String> = subjects.iter().filter(|s| s.group == Group::Hr).take(drop.min(n_sub - 1)).map(|s| s.subject_id.clone()).collect();
        for g in Group::ALL {
            for h in Hemisphere::BOTH {
                let p = pool(&subjects, g, h, &exclude).unwrap();
                let expected: usize = subjects.iter().filter(|s| s.group == g && !exclude.contains(&s.subject_id)).map(|s| s.sample(h).len()).sum();
                prop_assert_eq!(p.values.len(), expected);
            }
        }
    }
}
