//! Synthetic studies built from the simulation generator, for testing the
//! pipeline where true group differences are known.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Group, Result, SubjectRecord};
use crate::simkit::{AltParams, BinFrequencies, Generator};

/// Design of a synthetic study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Groups with the generator parameters of their subjects.
    pub groups: Vec<(Group, AltParams)>,
    pub subjects_per_group: usize,
    /// Mean number of distances per subject and hemisphere; actual counts
    /// vary uniformly by ±20%.
    pub distances_per_subject: usize,
    pub profile: BinFrequencies,
}

impl SynthSpec {
    /// Three groups of the same size drawn from the null generator.
    pub fn null(subjects_per_group: usize, distances_per_subject: usize) -> Self {
        SynthSpec {
            groups: Group::ALL.iter().map(|&g| (g, AltParams::NULL)).collect(),
            subjects_per_group,
            distances_per_subject,
            profile: BinFrequencies::reference(),
        }
    }

    pub fn with_params(mut self, group: Group, params: AltParams) -> Self {
        for (g, p) in &mut self.groups {
            if *g == group {
                *p = params;
            }
        }
        self
    }
}

/// Generates the subjects of `spec`. Subject `j` of MDD and subject `j` of HR
/// share the twin pair id `pair{j}`. Every subject hemisphere draws from its
/// own stream of a generator keyed by `seed`.
pub fn synthetic_study(spec: &SynthSpec, seed: u64) -> Result<Vec<SubjectRecord>> {
    let mut out = Vec::new();
    let n = spec.distances_per_subject;
    let (lo, hi) = (n - n / 5, n + n / 5);
    for (gi, &(group, params)) in spec.groups.iter().enumerate() {
        let gen = Generator::new(&spec.profile, params)?;
        for j in 0..spec.subjects_per_group {
            let mut sides = [Vec::new(), Vec::new()];
            for (h, side) in sides.iter_mut().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((gi * spec.subjects_per_group + j) * 2 + h) as u64);
                let len = rng.random_range(lo..=hi);
                *side = gen.sample(&mut rng, len);
            }
            let [left, right] = sides;
            let mut s = SubjectRecord::new(format!("{}{:03}", group.name(), j + 1), group, left, right);
            if matches!(group, Group::Mdd | Group::Hr) {
                s = s.with_twin(format!("pair{:03}", j + 1));
            }
            out.push(s);
        }
    }
    Ok(out)
}
