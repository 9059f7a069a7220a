use proptest::prelude::*;

use super::*;
use crate::npstats::dist::chi2_sf;

fn variant() -> BinFrequencies {
    BinFrequencies::from_counts(VARIANT_NU.to_vec()).unwrap()
}

#[test]
fn eta_zero_returns_profile() {
    let bins = alt_frequencies(&BinFrequencies::reference(), 0).unwrap();
    assert_eq!(&bins[..12], &REFERENCE_NU);
    assert_eq!(bins[12], 0);
}

#[test]
fn overflow_bin_arithmetic() {
    assert_eq!(alt_frequencies(&variant(), 10).unwrap()[12], 120);
    let b30 = alt_frequencies(&variant(), 30).unwrap();
    assert_eq!(b30[12], 332);
    assert_eq!(b30[11], 14);
    assert!(b30[..12].windows(2).all(|w| w[0] >= w[1]));
    // The canonical profile is measured against 11659, 23 below its own sum.
    assert_eq!(alt_frequencies(&BinFrequencies::reference(), 10).unwrap()[12], 97);
}

#[test]
fn negative_overflow_is_an_error() {
    let err = alt_frequencies(&BinFrequencies::reference(), 1).unwrap_err();
    assert_eq!(err, SimError::NegativeOverflow { eta: 1, value: -11 });
    assert!(err.to_string().contains("negative overflow bin"));
    let small = BinFrequencies::from_counts(vec![5; 12]).unwrap();
    assert!(alt_frequencies(&small, 20).is_err());
}

#[test]
fn profile_validation() {
    assert_eq!(BinFrequencies::new(vec![1; 11], 11), Err(SimError::ProfileLength(11)));
    assert_eq!(BinFrequencies::from_counts(vec![0; 12]), Err(SimError::EmptyProfile));
    assert!(AltParams::new(0.9, 0).is_err());
    assert!(AltParams::new(f64::NAN, 0).is_err());
}

#[test]
fn null_samples_stay_in_range() {
    let xs = generate_sample(&BinFrequencies::reference(), AltParams::NULL, 100_000, 3).unwrap();
    assert!(xs.iter().all(|&x| (0.0..6.0).contains(&x)));
}

#[test]
fn fixed_seed_is_reproducible() {
    let nu = BinFrequencies::reference();
    let p = AltParams::new(1.2, 10).unwrap();
    assert_eq!(generate_sample(&nu, p, 500, 42).unwrap(), generate_sample(&nu, p, 500, 42).unwrap());
    assert_ne!(generate_sample(&nu, p, 500, 42).unwrap(), generate_sample(&nu, p, 500, 43).unwrap());
}

#[test]
fn first_bin_fraction_matches_profile() {
    let n = 1_000_000;
    let xs = generate_sample(&BinFrequencies::reference(), AltParams::NULL, n, 11).unwrap();
    let frac = xs.iter().filter(|&&x| x < 0.5).count() as f64 / n as f64;
    assert!((frac - 2059.0 / 11659.0).abs() < 0.002, "{frac}");
}

fn chi_square_p(nu: &BinFrequencies, params: AltParams, seed: u64) -> f64 {
    let n = 1_000_000;
    let xs = generate_sample(nu, params, n, seed).unwrap();
    let mut counts = [0u64; 12];
    for x in xs {
        counts[(2.0 * x).floor() as usize] += 1;
    }
    let total = nu.sum() as f64;
    let stat: f64 = counts
        .iter()
        .zip(nu.counts())
        .map(|(&o, &v)| {
            let e = n as f64 * v as f64 / total;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    chi2_sf(stat, 11.0)
}

#[test]
fn null_recovery_goodness_of_fit() {
    let nu = BinFrequencies::reference();
    assert!(chi_square_p(&nu, AltParams::NULL, 2024) > 0.001);
    assert!(chi_square_p(&variant(), AltParams::NULL, 7) > 0.001);
}

#[test]
fn within_bin_offsets_are_uniform_over_r() {
    let r = 1.2;
    let xs = generate_sample(&BinFrequencies::reference(), AltParams::new(r, 0).unwrap(), 200_000, 5).unwrap();
    let offs: Vec<f64> = xs.iter().map(|&x| 2.0 * x).filter(|&v| v < 1.0).collect();
    let below_one = offs.len() as f64;
    // Bin 0 contributes offsets below 1 with probability 1/r; nothing else
    // reaches below 1.
    let expected = 200_000.0 * 2059.0 / 11682.0 / r;
    assert!((below_one - expected).abs() < 5.0 * expected.sqrt());
}

#[test]
fn config_validation() {
    let ok = SimConfig::new(vec![50, 50, 50], vec![], 10, 1);
    assert!(ok.validate().is_ok());
    let two_sample_test = ok.clone().with_tests(&[TestKind::RankSum]);
    assert!(two_sample_test.validate().is_err());
    let one_sided_kw = SimConfig::new(vec![50, 50], vec![], 10, 1)
        .with_tests(&[TestKind::KruskalWallis])
        .with_directions(&[Direction::Left]);
    assert!(one_sided_kw.validate().is_err());
    let mut bad_alpha = ok.clone();
    bad_alpha.alpha = 1.0;
    assert!(bad_alpha.validate().is_err());
    let big_eta = SimConfig::new(vec![50, 50], vec![AltParams::NULL, AltParams { r: 1.0, eta: 1 }], 10, 1);
    assert!(matches!(big_eta.validate(), Err(SimError::NegativeOverflow { .. })));
    assert!(run_size_study(&SimConfig::new(vec![50, 50], vec![AltParams::NULL, AltParams { r: 1.1, eta: 0 }], 10, 1)).is_err());
    assert!(run_power_study(&SimConfig::new(vec![50, 50], vec![], 10, 1)).is_err());
    let mut unseeded = ok;
    unseeded.seed = None;
    assert!(run_size_study(&unseeded).is_err());
}

#[test]
fn config_json_names() {
    let cfg: SimConfig = serde_json::from_str(
        r#"{"sizes":[100,100],"alt":[{"r":1},{"r":1.2,"eta":0}],"replicates":5,"seed":9,
            "tests":["BF","W","t","KS"],"directions":["two-sided","left"]}"#,
    )
    .unwrap();
    assert_eq!(cfg.effective_tests().len(), 4);
    assert_eq!(cfg.directions, vec![Direction::TwoSided, Direction::Left]);
    let err = serde_json::from_str::<SimConfig>(r#"{"sizes":[10,10],"tests":["XX"]}"#).unwrap_err();
    assert!(err.to_string().contains("expected one of"), "{err}");
}

fn csv_of(t: &EstimateTable) -> Vec<u8> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = SimConfig::new(vec![60, 60], vec![AltParams::NULL, AltParams::new(1.2, 10).unwrap()], 200, 77)
        .with_directions(&[Direction::TwoSided, Direction::Left, Direction::Right]);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = single.install(|| run_power_study(&cfg).unwrap());
    let b = run_power_study(&cfg).unwrap();
    assert_eq!(csv_of(&a), csv_of(&b));
    assert_eq!(a, b);
}

#[test]
fn csv_layout() {
    let cfg = SimConfig::new(vec![30, 30, 30], vec![], 20, 3);
    let t = run_size_study(&cfg).unwrap();
    let text = String::from_utf8(csv_of(&t)).unwrap();
    assert!(text.contains("# seed=3\n"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("direction,n_x,n_y,n_z,r_x,eta_x,r_y,eta_y,r_z,eta_z,alpha_BF,alpha_BF_se,alpha_KW"));
    assert!(header.contains("alpha_KW_F1,alpha_KW_F1_se"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn null_passed_as_power_design_rejects_at_alpha() {
    let cfg = SimConfig::new(vec![200, 200], vec![AltParams::NULL, AltParams::new(1.0, 0).unwrap()], 2000, 8)
        .with_tests(&[TestKind::RankSum, TestKind::WelchT]);
    let t = run_study(&cfg, StudyKind::Power).unwrap();
    assert_eq!(t.kind, StudyKind::Power);
    for e in &t.rows[0].estimates {
        assert!((e.rate - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / 2000.0).sqrt(), "{:?}", e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn agreements_bounded_by_rates(seed in any::<u64>(), r in 1.0f64..1.5) {
        let cfg = SimConfig::new(vec![40, 40], vec![AltParams::NULL, AltParams::new(r, 0).unwrap()], 60, seed)
            .with_directions(&[Direction::TwoSided, Direction::Left]);
        let t = run_study(&cfg, StudyKind::Power).unwrap();
        for row in &t.rows {
            for g in &row.agreements {
                let ra = row.rate(g.first).unwrap();
                let rb = row.rate(g.second).unwrap();
                prop_assert!(g.rate <= ra.min(rb));
                prop_assert!((0.0..=1.0).contains(&g.rate));
            }
        }
    }

    #[test]
    fn perturbed_samples_in_range(eta in 2u64..40, r in 1.0f64..2.0, seed in any::<u64>()) {
        let params = AltParams::new(r, eta).unwrap();
        let xs = generate_sample(&BinFrequencies::reference(), params, 2000, seed).unwrap();
        prop_assert!(xs.iter().all(|&x| x >= 0.0 && x < (12.0 + r) / 2.0));
    }
}
