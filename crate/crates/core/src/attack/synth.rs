//! Synthetic corpora with Zipf-distributed attribute values.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Zipf;

use super::campaign::TargetProfile;
use super::freq::FrequencyTable;
use super::AttackError;
use crate::num::Real;
use crate::primitives::RandomSource;

/// Draws `profiles` profiles. Attribute `i` is named `attributes[i].0` and
/// takes values `<name>-<k>` for `k` in `1..=attributes[i].1`, where value
/// `k` has probability proportional to `k^-exponent`.
pub fn zipf_profiles(
    attributes: &[(&str, usize)],
    profiles: usize,
    exponent: f64,
    rng: &mut RandomSource,
) -> Result<Vec<TargetProfile>, AttackError> {
    let dists = attributes
        .iter()
        .map(|&(name, k)| {
            Zipf::new(k as u64, exponent)
                .map_err(|e| AttackError::Input(format!("zipf for `{name}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    (0..profiles)
        .map(|i| {
            let attrs: Vec<(String, String)> = attributes
                .iter()
                .zip(&dists)
                .map(|(&(name, _), dist)| {
                    let k = rng.sample(dist) as u64;
                    (name.to_owned(), format!("{name}-{k}"))
                })
                .collect();
            TargetProfile::new(format!("p{i}"), &attrs)
        })
        .collect()
}

/// Empirical value frequencies of a corpus.
pub fn empirical_table<R: Real>(
    label: &str,
    targets: &[TargetProfile],
) -> Result<FrequencyTable<R>, AttackError> {
    let mut counts: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for p in targets {
        for (d, v) in &p.attributes {
            *counts.entry((d, v)).or_insert(0.0) += 1.0;
        }
    }
    FrequencyTable::from_counts(label, counts.into_iter().map(|((d, v), c)| (d, v, c)))
}

/// A basis that knows only part of each attribute's values. Values are
/// visited in random order and kept while the covered share of the
/// attribute's corpus occurrences stays within `coverage`; one more value
/// then tops it up to at least `coverage`. Kept values carry their
/// empirical frequencies.
pub fn partial_basis<R: Real>(
    label: &str,
    targets: &[TargetProfile],
    coverage: f64,
    rng: &mut RandomSource,
) -> Result<FrequencyTable<R>, AttackError> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(AttackError::Input(format!("coverage {coverage} not in (0, 1]")));
    }
    let full: FrequencyTable<f64> = empirical_table("full", targets)?;
    let mut keep: HashSet<(String, String)> = HashSet::new();
    for d in full.descriptions() {
        let mut values: Vec<(&String, f64)> =
            full.values(d).into_iter().flatten().map(|(v, &p)| (v, p)).collect();
        values.shuffle(rng);
        let mut covered = 0.0;
        let mut skipped = Vec::new();
        for (v, p) in values {
            if covered + p <= coverage {
                covered += p;
                keep.insert((d.to_owned(), v.clone()));
            } else {
                skipped.push((v, p));
            }
        }
        // Any skipped value closes the gap on its own; take the smallest.
        if covered < coverage - 1e-12 {
            if let Some((v, _)) = skipped.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
                keep.insert((d.to_owned(), (*v).clone()));
            }
        }
    }
    let rows: Vec<(String, String, f64)> = full
        .descriptions()
        .flat_map(|d| {
            full.values(d)
                .into_iter()
                .flatten()
                .map(move |(v, &p)| (d.to_owned(), v.clone(), p))
        })
        .filter(|(d, v, _)| keep.contains(&(d.clone(), v.clone())))
        .collect();
    FrequencyTable::from_counts(label, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ATTRS: [(&str, usize); 3] = [("name", 30), ("town", 20), ("school", 10)];

    #[test]
    fn zipf_head_dominates() {
        let mut rng = RandomSource::seeded(4);
        let targets = zipf_profiles(&ATTRS, 5_000, 1.0, &mut rng).unwrap();
        let ft: FrequencyTable<f64> = empirical_table("d", &targets).unwrap();
        let p1 = ft.probability("name", "name-1").unwrap();
        let p2 = ft.probability("name", "name-2").unwrap();
        // harmonic number H_30 is about 3.995
        assert!((p1 - 1.0 / 3.995).abs() < 0.03, "{p1}");
        assert!((p1 / p2 - 2.0).abs() < 0.35, "{}", p1 / p2);
    }

    #[test]
    fn seeded_corpora_repeat() {
        let a = zipf_profiles(&ATTRS, 50, 1.0, &mut RandomSource::seeded(9)).unwrap();
        let b = zipf_profiles(&ATTRS, 50, 1.0, &mut RandomSource::seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partial_basis_reaches_coverage() {
        let mut rng = RandomSource::seeded(5);
        let targets = zipf_profiles(&ATTRS, 3_000, 1.0, &mut rng).unwrap();
        let basis: FrequencyTable<f64> = partial_basis("p", &targets, 0.6, &mut rng).unwrap();
        for (d, _) in ATTRS {
            let known = targets
                .iter()
                .filter(|p| {
                    let v = &p.attributes.iter().find(|(x, _)| x == d).unwrap().1;
                    basis.probability(d, v).is_some()
                })
                .count() as f64
                / targets.len() as f64;
            assert!(known >= 0.6 - 1e-9, "{d}: {known}");
        }
        assert!(partial_basis::<f64>("p", &targets, 0.0, &mut rng).is_err());
    }
}
