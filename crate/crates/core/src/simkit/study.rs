use std::fmt;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AltParams, BinFrequencies, Generator, Result, SimError};
use crate::npstats::{
    anova_f, brown_forsythe, brown_forsythe_two_sample, kruskal_wallis, ks_two_sample, t_test, welch_anova,
    wilcoxon_rank_sum, Alternative, PMode, StatsError, TestResult,
};

/// How replicate random streams are derived from the base seed.
pub const SEED_RULE: &str = "replicate k uses ChaCha8Rng::seed_from_u64(seed) with stream k";

/// Random stream for replicate `rep`. Every replicate gets its own stream of
/// the same keyed generator, so results do not depend on scheduling.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Tests available to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    /// Brown-Forsythe test of equal spread.
    #[serde(rename = "BF")]
    BrownForsythe,
    #[serde(rename = "KW")]
    KruskalWallis,
    /// One-way ANOVA F assuming equal variances.
    #[serde(rename = "F1")]
    AnovaF,
    /// Welch ANOVA, no equal-variance assumption.
    #[serde(rename = "F2")]
    WelchAnova,
    /// Wilcoxon rank-sum.
    #[serde(rename = "W")]
    RankSum,
    /// Welch two-sample t.
    #[serde(rename = "t")]
    WelchT,
    #[serde(rename = "KS")]
    KolmogorovSmirnov,
}

impl TestKind {
    pub const ALL: [TestKind; 7] = [
        TestKind::BrownForsythe,
        TestKind::KruskalWallis,
        TestKind::AnovaF,
        TestKind::WelchAnova,
        TestKind::RankSum,
        TestKind::WelchT,
        TestKind::KolmogorovSmirnov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::BrownForsythe => "BF",
            TestKind::KruskalWallis => "KW",
            TestKind::AnovaF => "F1",
            TestKind::WelchAnova => "F2",
            TestKind::RankSum => "W",
            TestKind::WelchT => "t",
            TestKind::KolmogorovSmirnov => "KS",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn two_sample_only(self) -> bool {
        matches!(self, TestKind::RankSum | TestKind::WelchT | TestKind::KolmogorovSmirnov)
    }

    fn has_one_sided(self) -> bool {
        !matches!(self, TestKind::KruskalWallis | TestKind::AnovaF | TestKind::WelchAnova)
    }

    fn run(self, dir: Direction, samples: &[Vec<f64>]) -> std::result::Result<TestResult, StatsError> {
        let alt = dir.alternative();
        match self {
            TestKind::BrownForsythe if samples.len() == 2 => brown_forsythe_two_sample(&samples[0], &samples[1], alt),
            TestKind::BrownForsythe => brown_forsythe(samples),
            TestKind::KruskalWallis => kruskal_wallis(samples),
            TestKind::AnovaF => anova_f(samples),
            TestKind::WelchAnova => welch_anova(samples),
            TestKind::RankSum => wilcoxon_rank_sum(&samples[0], &samples[1], alt, PMode::Asymptotic),
            TestKind::WelchT => t_test(&samples[0], &samples[1], alt),
            // A left-sided KS alternative puts the cdf of the first sample above
            // the second.
            TestKind::KolmogorovSmirnov => {
                let cdf_alt = match alt {
                    Alternative::Less => Alternative::Greater,
                    Alternative::Greater => Alternative::Less,
                    Alternative::TwoSided => Alternative::TwoSided,
                };
                ks_two_sample(&samples[0], &samples[1], cdf_alt)
            }
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Alternative direction for two-sample studies. `Left` means the first
/// sample tends to take smaller values than the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    TwoSided,
    Left,
    Right,
}

impl Direction {
    pub fn alternative(self) -> Alternative {
        match self {
            Direction::TwoSided => Alternative::TwoSided,
            Direction::Left => Alternative::Less,
            Direction::Right => Alternative::Greater,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::TwoSided => "two-sided",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Size,
    Power,
}

/// Profile given in a config; the reference total defaults to the sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_total: Option<u64>,
}

/// One Monte Carlo design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Sample sizes, first sample first. Two or three samples.
    pub sizes: Vec<usize>,
    /// Per-sample parameters; empty means every sample is null.
    #[serde(default)]
    pub alt: Vec<AltParams>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Base seed. Must be set before running.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Tests to run; defaults to BF, KW, F1, F2 for three samples and BF, W,
    /// t, KS for two.
    #[serde(default)]
    pub tests: Vec<TestKind>,
    #[serde(default = "default_directions")]
    pub directions: Vec<Direction>,
    /// Frequency profile; the canonical reference profile when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_replicates() -> usize {
    10_000
}

fn default_directions() -> Vec<Direction> {
    vec![Direction::TwoSided]
}

impl SimConfig {
    pub fn new(sizes: Vec<usize>, alt: Vec<AltParams>, replicates: usize, seed: u64) -> Self {
        SimConfig {
            sizes,
            alt,
            alpha: default_alpha(),
            replicates,
            seed: Some(seed),
            tests: Vec::new(),
            directions: default_directions(),
            profile: None,
        }
    }

    pub fn with_tests(mut self, tests: &[TestKind]) -> Self {
        self.tests = tests.to_vec();
        self
    }

    pub fn with_directions(mut self, dirs: &[Direction]) -> Self {
        self.directions = dirs.to_vec();
        self
    }

    pub fn params(&self) -> Vec<AltParams> {
        if self.alt.is_empty() {
            vec![AltParams::NULL; self.sizes.len()]
        } else {
            self.alt.clone()
        }
    }

    pub fn effective_tests(&self) -> Vec<TestKind> {
        if !self.tests.is_empty() {
            return self.tests.clone();
        }
        if self.sizes.len() == 2 {
            vec![TestKind::BrownForsythe, TestKind::RankSum, TestKind::WelchT, TestKind::KolmogorovSmirnov]
        } else {
            vec![TestKind::BrownForsythe, TestKind::KruskalWallis, TestKind::AnovaF, TestKind::WelchAnova]
        }
    }

    pub fn frequencies(&self) -> Result<BinFrequencies> {
        match &self.profile {
            None => Ok(BinFrequencies::reference()),
            Some(p) => {
                let total = p.reference_total.unwrap_or_else(|| p.counts.iter().sum());
                BinFrequencies::new(p.counts.clone(), total)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        let k = self.sizes.len();
        if !(2..=3).contains(&k) {
            return bad(format!("need 2 or 3 sample sizes, got {k}"));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 2) {
            return bad(format!("sample size {n} is below 2"));
        }
        if !self.alt.is_empty() && self.alt.len() != k {
            return bad(format!("{} alternative entries for {k} samples", self.alt.len()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.directions.is_empty() {
            return bad("no directions given".into());
        }
        let tests = self.effective_tests();
        for t in &tests {
            if t.two_sample_only() && k != 2 {
                return bad(format!("test {t} needs exactly two samples"));
            }
        }
        if self.directions.iter().any(|&d| d != Direction::TwoSided) {
            if k != 2 {
                return bad("one-sided directions need exactly two samples".into());
            }
            if let Some(t) = tests.iter().find(|t| !t.has_one_sided()) {
                return bad(format!("test {t} has no one-sided form"));
            }
        }
        let nu = self.frequencies()?;
        for p in self.params() {
            Generator::new(&nu, p)?;
        }
        Ok(())
    }
}

/// Rejection rate of one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub test: TestKind,
    pub rate: f64,
    pub se: f64,
    pub rejections: u64,
    /// Replicates where the test could not be computed (counted as non-rejections).
    pub failures: u64,
}

/// Proportion of replicates where both tests rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub first: TestKind,
    pub second: TestKind,
    pub rate: f64,
    pub se: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub sizes: Vec<usize>,
    pub params: Vec<AltParams>,
    pub direction: Direction,
    pub estimates: Vec<Estimate>,
    pub agreements: Vec<Agreement>,
}

impl EstimateRow {
    pub fn rate(&self, test: TestKind) -> Option<f64> {
        self.estimates.iter().find(|e| e.test == test).map(|e| e.rate)
    }

    pub fn agreement(&self, a: TestKind, b: TestKind) -> Option<f64> {
        self.agreements
            .iter()
            .find(|g| (g.first, g.second) == (a, b) || (g.first, g.second) == (b, a))
            .map(|g| g.rate)
    }
}

/// Empirical size or power estimates, one row per design and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateTable {
    pub kind: StudyKind,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub tests: Vec<TestKind>,
    pub rows: Vec<EstimateRow>,
}

#[derive(Clone)]
struct Counts {
    reject: Vec<u64>,
    fail: Vec<u64>,
    both: Vec<u64>,
}

impl Counts {
    fn new(cols: usize) -> Self {
        Counts { reject: vec![0; cols], fail: vec![0; cols], both: vec![0; cols * cols] }
    }

    fn merge(mut self, o: Counts) -> Counts {
        for (a, b) in self.reject.iter_mut().zip(o.reject) {
            *a += b;
        }
        for (a, b) in self.fail.iter_mut().zip(o.fail) {
            *a += b;
        }
        for (a, b) in self.both.iter_mut().zip(o.both) {
            *a += b;
        }
        self
    }
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Runs `config` and labels the estimates as sizes or powers. Unlike the
/// two wrappers below, this does not check the parameters against `kind`.
pub fn run_study(config: &SimConfig, kind: StudyKind) -> Result<EstimateTable> {
    config.validate()?;
    let params = config.params();
    let seed = config
        .seed
        .ok_or_else(|| SimError::InvalidConfig("seed must be set before running".into()))?;
    let nu = config.frequencies()?;
    let gens: Vec<Generator> = params.iter().map(|&p| Generator::new(&nu, p)).collect::<Result<_>>()?;
    let tests = config.effective_tests();
    let columns: Vec<(Direction, TestKind)> =
        config.directions.iter().flat_map(|&d| tests.iter().map(move |&t| (d, t))).collect();
    let nc = columns.len();

    let counts = (0..config.replicates as u64)
        .into_par_iter()
        .fold(
            || Counts::new(nc),
            |mut acc, rep| {
                let mut rng = replicate_rng(seed, rep);
                let samples: Vec<Vec<f64>> =
                    gens.iter().zip(&config.sizes).map(|(g, &n)| g.sample(&mut rng, n)).collect();
                let mut hit = vec![false; nc];
                for (c, &(dir, test)) in columns.iter().enumerate() {
                    match test.run(dir, &samples) {
                        Ok(res) => hit[c] = res.p_value < config.alpha,
                        Err(_) => acc.fail[c] += 1,
                    }
                }
                for i in 0..nc {
                    if hit[i] {
                        acc.reject[i] += 1;
                        for j in i + 1..nc {
                            if hit[j] {
                                acc.both[i * nc + j] += 1;
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| Counts::new(nc), Counts::merge);

    let n = config.replicates;
    let rate = |c: u64| c as f64 / n as f64;
    let rows = config
        .directions
        .iter()
        .enumerate()
        .map(|(di, &direction)| {
            let base = di * tests.len();
            let estimates = tests
                .iter()
                .enumerate()
                .map(|(ti, &test)| {
                    let c = base + ti;
                    let p = rate(counts.reject[c]);
                    if counts.fail[c] > 0 {
                        log::warn!("{test} ({}) failed in {} replicate(s)", direction.name(), counts.fail[c]);
                    }
                    Estimate { test, rate: p, se: binomial_se(p, n), rejections: counts.reject[c], failures: counts.fail[c] }
                })
                .collect();
            let mut agreements = Vec::new();
            for a in 0..tests.len() {
                for b in a + 1..tests.len() {
                    let count = counts.both[(base + a) * nc + base + b];
                    let p = rate(count);
                    agreements.push(Agreement { first: tests[a], second: tests[b], rate: p, se: binomial_se(p, n), count });
                }
            }
            EstimateRow { sizes: config.sizes.clone(), params: params.clone(), direction, estimates, agreements }
        })
        .collect();

    Ok(EstimateTable { kind, alpha: config.alpha, replicates: n, seed, tests, rows })
}

/// Empirical sizes; every sample must use null parameters.
pub fn run_size_study(config: &SimConfig) -> Result<EstimateTable> {
    if !config.params().iter().all(AltParams::is_null) {
        return Err(SimError::InvalidConfig("a size study needs null parameters for every sample".into()));
    }
    run_study(config, StudyKind::Size)
}

/// Empirical power; at least one sample must be non-null.
pub fn run_power_study(config: &SimConfig) -> Result<EstimateTable> {
    if config.params().iter().all(AltParams::is_null) {
        return Err(SimError::InvalidConfig("a power study needs at least one non-null sample".into()));
    }
    run_study(config, StudyKind::Power)
}

const SAMPLE_NAMES: [&str; 3] = ["x", "y", "z"];

impl EstimateTable {
    /// Appends the rows of `other`, which must use the same tests, sample
    /// count, study kind, level, replicate count and seed.
    pub fn extend(&mut self, other: EstimateTable) -> Result<()> {
        let samples = |t: &EstimateTable| t.rows.first().map(|r| r.sizes.len());
        if other.tests != self.tests || other.kind != self.kind || samples(&other) != samples(self) {
            return Err(SimError::InvalidConfig("tables with different layouts cannot be combined".into()));
        }
        if (other.alpha, other.replicates, other.seed) != (self.alpha, self.replicates, self.seed) {
            return Err(SimError::InvalidConfig(
                "rows of one table must share alpha, replicates and seed".into(),
            ));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    /// Writes the table as CSV with `# key=value` header comments. Rates are
    /// prefixed `alpha_` for size studies and `beta_` for power studies, and
    /// each is followed by its binomial standard error.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let prefix = match self.kind {
            StudyKind::Size => "alpha",
            StudyKind::Power => "beta",
        };
        writeln!(w, "# study={}", prefix)?;
        writeln!(w, "# alpha={}", self.alpha)?;
        writeln!(w, "# replicates={}", self.replicates)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# seed_rule={SEED_RULE}")?;
        for row in &self.rows {
            for e in row.estimates.iter().filter(|e| e.failures > 0) {
                writeln!(w, "# failures {} {} {}={}", row.direction.name(), fmt_sizes(&row.sizes), e.test, e.failures)?;
            }
        }
        let k = self.rows.first().map_or(0, |r| r.sizes.len());
        let mut header: Vec<String> = vec!["direction".into()];
        header.extend((0..k).map(|i| format!("n_{}", SAMPLE_NAMES[i])));
        for i in 0..k {
            header.push(format!("r_{}", SAMPLE_NAMES[i]));
            header.push(format!("eta_{}", SAMPLE_NAMES[i]));
        }
        for t in &self.tests {
            header.push(format!("{prefix}_{t}"));
            header.push(format!("{prefix}_{t}_se"));
        }
        for a in 0..self.tests.len() {
            for b in a + 1..self.tests.len() {
                header.push(format!("{prefix}_{}_{}", self.tests[a], self.tests[b]));
                header.push(format!("{prefix}_{}_{}_se", self.tests[a], self.tests[b]));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut cells: Vec<String> = vec![row.direction.name().into()];
            cells.extend(row.sizes.iter().map(|n| n.to_string()));
            for p in &row.params {
                cells.push(p.r.to_string());
                cells.push(p.eta.to_string());
            }
            for e in &row.estimates {
                cells.push(e.rate.to_string());
                cells.push(format!("{:.6}", e.se));
            }
            for g in &row.agreements {
                cells.push(g.rate.to_string());
                cells.push(format!("{:.6}", g.se));
            }
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn fmt_sizes(sizes: &[usize]) -> String {
    sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
}
