//! Dictionary-attack campaigns against a corpus of target profiles.

use std::collections::HashMap;
use std::io::Read;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::enumerate::{enumerate_guesses, lexicographic_subsets, search_space};
use super::freq::{build_ranks, FrequencyTable, RankTable};
use super::AttackError;
use crate::normalize::normalize;
use crate::num::{mean_std, Real};
use crate::primitives::RandomSource;
use crate::scheme::{access, protect, Attribute, Guess};
use crate::shamir::SharingParams;

/// One protected post's attributes, in post order. Descriptions and values
/// are kept normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetProfile {
    pub id: String,
    pub attributes: Vec<(String, String)>,
}

impl TargetProfile {
    pub fn new<D: AsRef<str>, V: AsRef<str>>(
        id: impl Into<String>,
        attributes: &[(D, V)],
    ) -> Result<Self, AttackError> {
        let attributes = attributes
            .iter()
            .map(|(d, v)| {
                let d = normalize(d.as_ref())
                    .map_err(|_| AttackError::Input("empty description".into()))?;
                let v = normalize(v.as_ref())
                    .map_err(|_| AttackError::Input(format!("empty value for `{d}`")))?;
                Ok((d, v))
            })
            .collect::<Result<_, AttackError>>()?;
        Ok(TargetProfile {
            id: id.into(),
            attributes,
        })
    }

    pub fn descriptions(&self) -> Vec<String> {
        self.attributes.iter().map(|(d, _)| d.clone()).collect()
    }
}

#[derive(Deserialize)]
struct TargetRow {
    profile_id: String,
    description: String,
    value: String,
}

/// CSV with header `profile_id,description,value`. Rows of one profile keep
/// their order; profiles appear in order of first occurrence.
pub fn read_targets_csv<Rd: Read>(reader: Rd) -> Result<Vec<TargetProfile>, AttackError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["profile_id", "description", "value"] {
        return Err(AttackError::Input(
            "expected header `profile_id,description,value`".into(),
        ));
    }
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<(String, String)>> = HashMap::new();
    for row in rdr.deserialize::<TargetRow>() {
        let row = row?;
        let entry = grouped.entry(row.profile_id.clone()).or_insert_with(|| {
            order.push(row.profile_id.clone());
            Vec::new()
        });
        entry.push((row.description, row.value));
    }
    order
        .into_iter()
        .map(|id| {
            let attrs = grouped.remove(&id).unwrap_or_default();
            TargetProfile::new(id, &attrs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Guesses are checked by comparing values.
    Simulated,
    /// Each target is protected for real and every guess runs `access`.
    RealCrypto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackConfig {
    pub threshold: usize,
    pub budget: u64,
    pub mode: CheckMode,
    pub seed: u64,
}

impl AttackConfig {
    pub fn simulated(threshold: usize, budget: u64) -> Self {
        AttackConfig {
            threshold,
            budget,
            mode: CheckMode::Simulated,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffPoint<R> {
    pub budget: u64,
    pub fraction: R,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TargetOutcome {
    pub profile_id: String,
    /// 1-based index of the opening guess, or `None` if the budget ran out.
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport<R> {
    pub basis_label: String,
    pub threshold: usize,
    pub budget: u64,
    pub mode: CheckMode,
    pub targets: usize,
    /// Number of distinct guesses the basis allows.
    pub search_space: u128,
    pub success_rate: R,
    /// Failed targets count as the whole search space.
    pub mean_trials: R,
    pub trials_stddev: R,
    pub payoff_curve: Vec<PayoffPoint<R>>,
    pub outcomes: Vec<TargetOutcome>,
}

impl<R: Real> AttackReport<R> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// `budget,fraction` rows for plotting.
    pub fn payoff_csv(&self) -> String {
        let mut out = String::from("budget,fraction\n");
        for p in &self.payoff_curve {
            out.push_str(&format!("{},{}\n", p.budget, p.fraction));
        }
        out
    }
}

/// Powers of ten below `budget`, then `budget` itself.
fn checkpoints(budget: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 1u64;
    while c < budget {
        out.push(c);
        c = match c.checked_mul(10) {
            Some(next) => next,
            None => break,
        };
    }
    out.push(budget);
    out
}

fn validate(
    targets: &[TargetProfile],
    rt: &RankTable,
    config: &AttackConfig,
) -> Result<Vec<String>, AttackError> {
    let first = targets
        .first()
        .ok_or_else(|| AttackError::InconsistentTargets("no targets".into()))?;
    let descriptions = first.descriptions();
    if let Some(bad) = targets.iter().find(|p| p.descriptions() != descriptions) {
        return Err(AttackError::InconsistentTargets(format!(
            "profile `{}` has different descriptions than `{}`",
            bad.id, first.id
        )));
    }
    let n = descriptions.len();
    if config.threshold == 0 || config.threshold > n {
        return Err(AttackError::InvalidThreshold {
            t: config.threshold,
            n,
        });
    }
    if config.budget == 0 {
        return Err(AttackError::InvalidBudget);
    }
    if let Some(d) = descriptions.iter().find(|d| !rt.contains_description(d)) {
        return Err(AttackError::DescriptionNotInBasis(d.clone()));
    }
    Ok(descriptions)
}

/// Runs the informed dictionary attack against every target.
pub fn run_attack<R: Real>(
    targets: &[TargetProfile],
    basis: &FrequencyTable<R>,
    config: &AttackConfig,
) -> Result<AttackReport<R>, AttackError> {
    let rt = build_ranks(basis)?;
    let descriptions = validate(targets, &rt, config)?;
    let t = config.threshold;
    let trials = match config.mode {
        CheckMode::Simulated => simulate(targets, &rt, &descriptions, t, config.budget),
        CheckMode::RealCrypto => real_crypto(targets, &rt, &descriptions, config)?,
    };
    let space = search_space(&rt, &descriptions, t);
    Ok(summarize(basis.label(), config, space, targets, trials))
}

/// Streams the guesses once and matches each against every target that
/// could be opened by it.
fn simulate(
    targets: &[TargetProfile],
    rt: &RankTable,
    descriptions: &[String],
    t: usize,
    budget: u64,
) -> Vec<Option<u64>> {
    let subsets = lexicographic_subsets(descriptions.len(), t);
    let mut waiting: HashMap<(usize, Vec<u32>), Vec<usize>> = HashMap::new();
    let mut solvable = vec![false; targets.len()];
    for (ti, target) in targets.iter().enumerate() {
        for (si, subset) in subsets.iter().enumerate() {
            let ranks: Option<Vec<u32>> = subset
                .iter()
                .map(|&p| {
                    let (d, v) = &target.attributes[p];
                    rt.rank(d, v)
                })
                .collect();
            if let Some(ranks) = ranks {
                waiting.entry((si, ranks)).or_default().push(ti);
                solvable[ti] = true;
            }
        }
    }
    let mut remaining = solvable.iter().filter(|&&s| s).count();
    let mut found: Vec<Option<u64>> = vec![None; targets.len()];
    if remaining == 0 {
        return found;
    }
    for (k, guess) in enumerate_guesses(rt, descriptions, t, budget).enumerate() {
        if let Some(hits) = waiting.remove(&(guess.subset, guess.ranks)) {
            for ti in hits {
                if found[ti].is_none() {
                    found[ti] = Some(k as u64 + 1);
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                break;
            }
        }
    }
    found
}

/// Protects a random post for every target and opens it by trial
/// decryption. Each target has its own derived random stream, so the
/// outcome does not depend on scheduling.
fn real_crypto(
    targets: &[TargetProfile],
    rt: &RankTable,
    descriptions: &[String],
    config: &AttackConfig,
) -> Result<Vec<Option<u64>>, AttackError> {
    let n = descriptions.len();
    let params = SharingParams::new(n, config.threshold).map_err(|_| {
        AttackError::InvalidThreshold {
            t: config.threshold,
            n,
        }
    })?;
    targets
        .par_iter()
        .enumerate()
        .map(|(i, target)| {
            let mut rng = RandomSource::derived(config.seed, i as u64);
            let attrs = target
                .attributes
                .iter()
                .map(|(d, v)| Attribute::new(d, v))
                .collect::<Result<Vec<_>, _>>()?;
            let mut post = vec![0u8; 32];
            rng.fill_bytes(&mut post);
            let pp = protect(&attrs, &post, params, &mut rng)?;
            for (k, guess) in enumerate_guesses(rt, descriptions, config.threshold, config.budget)
                .enumerate()
            {
                let values = guess.values(rt, descriptions);
                let guesses: Vec<Guess> = guess
                    .positions
                    .iter()
                    .zip(values)
                    .map(|(&p, v)| Guess::new(p + 1, v))
                    .collect();
                if access(&guesses, &pp)? == post {
                    return Ok(Some(k as u64 + 1));
                }
            }
            Ok(None)
        })
        .collect()
}

fn summarize<R: Real>(
    label: &str,
    config: &AttackConfig,
    space: u128,
    targets: &[TargetProfile],
    trials: Vec<Option<u64>>,
) -> AttackReport<R> {
    let total = targets.len();
    let costs: Vec<R> = trials
        .iter()
        .map(|t| match t {
            Some(k) => R::of_u128(*k as u128),
            None => R::of_u128(space),
        })
        .collect();
    let (mean_trials, trials_stddev) = mean_std(&costs);
    let fraction = |limit: u64| {
        let opened = trials.iter().filter(|t| t.is_some_and(|k| k <= limit)).count();
        R::of_usize(opened) / R::of_usize(total)
    };
    let payoff_curve: Vec<PayoffPoint<R>> = checkpoints(config.budget)
        .into_iter()
        .map(|b| PayoffPoint {
            budget: b,
            fraction: fraction(b),
        })
        .collect();
    AttackReport {
        basis_label: label.to_owned(),
        threshold: config.threshold,
        budget: config.budget,
        mode: config.mode,
        targets: total,
        search_space: space,
        success_rate: fraction(config.budget),
        mean_trials,
        trials_stddev,
        payoff_curve,
        outcomes: targets
            .iter()
            .zip(trials)
            .map(|(p, trials)| TargetOutcome {
                profile_id: p.id.clone(),
                trials,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Materializes every guess, sorts by the documented key and scans for
    /// the first one matching each target.
    fn brute_force(
        targets: &[TargetProfile],
        basis: &FrequencyTable<f64>,
        t: usize,
        budget: u64,
    ) -> Vec<Option<u64>> {
        let descriptions = targets[0].descriptions();
        let rank = |d: &str, v: &str| -> usize {
            let mut vals: Vec<(&String, &f64)> = basis.values(d).unwrap().iter().collect();
            vals.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap().then(a.0.cmp(b.0)));
            vals.iter().position(|(x, _)| x.as_str() == v).unwrap() + 1
        };
        let mut guesses: Vec<(usize, Vec<usize>, Vec<usize>, Vec<String>)> = Vec::new();
        let n = descriptions.len();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != t {
                continue;
            }
            let pos: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let mut partial: Vec<Vec<String>> = vec![vec![]];
            for &p in &pos {
                let vals: Vec<String> = basis.values(&descriptions[p]).unwrap().keys().cloned().collect();
                partial = partial
                    .into_iter()
                    .flat_map(|pre| {
                        vals.iter().map(move |v| {
                            let mut next = pre.clone();
                            next.push(v.clone());
                            next
                        })
                    })
                    .collect();
            }
            for vals in partial {
                let ranks: Vec<usize> =
                    pos.iter().zip(&vals).map(|(&p, v)| rank(&descriptions[p], v)).collect();
                let product = ranks.iter().product();
                guesses.push((product, pos.clone(), ranks, vals));
            }
        }
        guesses.sort_by(|a, b| (a.0, &a.1, &a.2).cmp(&(b.0, &b.1, &b.2)));
        guesses.truncate(budget as usize);
        targets
            .iter()
            .map(|target| {
                guesses
                    .iter()
                    .position(|(_, pos, _, vals)| {
                        pos.iter().zip(vals).all(|(&p, v)| target.attributes[p].1 == *v)
                    })
                    .map(|i| i as u64 + 1)
            })
            .collect()
    }

    fn toy_campaign(seed: u64, n: usize, k: usize, profiles: usize) -> (Vec<TargetProfile>, FrequencyTable<f64>) {
        let mut rng = RandomSource::seeded(seed);
        let names: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let mut rows = Vec::new();
        for d in &names {
            for v in 0..k {
                rows.push((d.clone(), format!("v{v}"), rng.gen_range(1..20) as f64));
            }
        }
        let basis = FrequencyTable::from_counts("toy", rows).unwrap();
        let targets = (0..profiles)
            .map(|i| {
                // values outside the basis exercise the unreachable path
                let attrs: Vec<(String, String)> = names
                    .iter()
                    .map(|d| (d.clone(), format!("v{}", rng.gen_range(0..k + 1))))
                    .collect();
                TargetProfile::new(format!("p{i}"), &attrs).unwrap()
            })
            .collect();
        (targets, basis)
    }

    #[test]
    fn matches_brute_force_on_toy_corpora() {
        for seed in 0..12 {
            let n = 1 + (seed as usize % 3);
            let (targets, basis) = toy_campaign(seed, n, 4, 10);
            for t in 1..=n {
                for budget in [1, 5, 1000] {
                    let report: AttackReport<f64> =
                        run_attack(&targets, &basis, &AttackConfig::simulated(t, budget)).unwrap();
                    let got: Vec<Option<u64>> = report.outcomes.iter().map(|o| o.trials).collect();
                    assert_eq!(got, brute_force(&targets, &basis, t, budget), "seed {seed} t {t}");
                }
            }
        }
    }

    #[test]
    fn exact_basis_opens_everything() {
        let targets: Vec<TargetProfile> = [("ann", "bonn"), ("bob", "köln"), ("ann", "köln")]
            .iter()
            .enumerate()
            .map(|(i, (a, b))| TargetProfile::new(format!("{i}"), &[("name", *a), ("town", *b)]).unwrap())
            .collect();
        let basis = FrequencyTable::<f64>::from_counts(
            "exact",
            targets.iter().flat_map(|p| p.attributes.iter().map(|(d, v)| (d.clone(), v.clone(), 1.0))),
        )
        .unwrap();
        let report: AttackReport<f64> =
            run_attack(&targets, &basis, &AttackConfig::simulated(2, 1_000)).unwrap();
        assert_eq!(report.success_rate, 1.0);
        assert_eq!(report.search_space, 4);
        assert!(report.mean_trials >= 1.0);
    }

    #[test]
    fn absent_values_are_never_found() {
        let targets = vec![TargetProfile::new("x", &[("a", "zz"), ("b", "b1")]).unwrap()];
        let basis = FrequencyTable::<f64>::from_counts("b", [("a", "a1", 1.0), ("b", "b1", 1.0)]).unwrap();
        let report: AttackReport<f64> =
            run_attack(&targets, &basis, &AttackConfig::simulated(2, 100)).unwrap();
        assert_eq!(report.success_rate, 0.0);
        assert_eq!(report.mean_trials, 1.0);
        assert_eq!(report.outcomes[0].trials, None);
    }

    #[test]
    fn rank_one_values_open_in_one_trial() {
        let targets = vec![TargetProfile::new("x", &[("a", "a1"), ("b", "b1")]).unwrap()];
        let basis = FrequencyTable::<f64>::from_counts(
            "b",
            [("a", "a1", 5.0), ("a", "a2", 1.0), ("b", "b1", 3.0), ("b", "b2", 1.0)],
        )
        .unwrap();
        let report: AttackReport<f64> =
            run_attack(&targets, &basis, &AttackConfig::simulated(2, 1)).unwrap();
        assert_eq!(report.outcomes[0].trials, Some(1));
        assert_eq!(report.success_rate, 1.0);
    }

    #[test]
    fn success_is_monotone_in_threshold() {
        let (targets, basis) = toy_campaign(99, 4, 6, 200);
        let rates: Vec<f64> = (1..=4)
            .map(|t| {
                run_attack::<f64>(&targets, &basis, &AttackConfig::simulated(t, u64::MAX))
                    .unwrap()
                    .success_rate
            })
            .collect();
        assert!(rates.windows(2).all(|w| w[0] >= w[1]), "{rates:?}");
    }

    #[test]
    fn payoff_curve_shape() {
        let (targets, basis) = toy_campaign(7, 3, 8, 50);
        let report: AttackReport<f64> =
            run_attack(&targets, &basis, &AttackConfig::simulated(2, 250)).unwrap();
        let budgets: Vec<u64> = report.payoff_curve.iter().map(|p| p.budget).collect();
        assert_eq!(budgets, vec![1, 10, 100, 250]);
        assert!(report.payoff_curve.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        assert_eq!(report.payoff_curve.last().unwrap().fraction, report.success_rate);
        assert!(report.payoff_csv().starts_with("budget,fraction\n1,"));
        assert_eq!(checkpoints(1), vec![1]);
        assert_eq!(checkpoints(100), vec![1, 10, 100]);
    }

    #[test]
    fn real_crypto_agrees_with_simulation() {
        let (targets, basis) = toy_campaign(3, 3, 3, 6);
        for t in 1..=3 {
            let sim: AttackReport<f64> =
                run_attack(&targets, &basis, &AttackConfig::simulated(t, 100)).unwrap();
            let real: AttackReport<f64> = run_attack(
                &targets,
                &basis,
                &AttackConfig { mode: CheckMode::RealCrypto, seed: 11, ..AttackConfig::simulated(t, 100) },
            )
            .unwrap();
            assert_eq!(sim.outcomes, real.outcomes);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let (targets, basis) = toy_campaign(5, 3, 5, 40);
        let cfg = AttackConfig::simulated(2, 1000);
        let a = run_attack::<f64>(&targets, &basis, &cfg).unwrap();
        let b = run_attack::<f64>(&targets, &basis, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn rejects_bad_campaigns() {
        let basis = FrequencyTable::<f64>::from_counts("b", [("a", "x", 1.0), ("b", "y", 1.0)]).unwrap();
        let p = |id: &str, d: &str| TargetProfile::new(id, &[("a", "x"), (d, "y")]).unwrap();
        let ok = vec![p("1", "b")];
        assert!(matches!(
            run_attack(&[p("1", "b"), p("2", "c")], &basis, &AttackConfig::simulated(1, 5)),
            Err(AttackError::InconsistentTargets(_))
        ));
        assert!(matches!(
            run_attack(&[p("1", "c")], &basis, &AttackConfig::simulated(1, 5)),
            Err(AttackError::DescriptionNotInBasis(_))
        ));
        assert!(matches!(
            run_attack(&ok, &basis, &AttackConfig::simulated(3, 5)),
            Err(AttackError::InvalidThreshold { t: 3, n: 2 })
        ));
        assert!(matches!(
            run_attack(&ok, &basis, &AttackConfig::simulated(1, 0)),
            Err(AttackError::InvalidBudget)
        ));
        assert!(matches!(
            run_attack(&[], &basis, &AttackConfig::simulated(1, 5)),
            Err(AttackError::InconsistentTargets(_))
        ));
    }

    #[test]
    fn reads_target_csv() {
        let text = "profile_id,description,value\n1,Name,Ann\n2,Name,Bob\n1,Town,Bonn\n2,Town,\"Köln, Süd\"\n";
        let targets = read_targets_csv(text.as_bytes()).unwrap();
        assert_eq!(targets.len(), 2);
        assert_eq!(targets[0].attributes, vec![("name".into(), "ann".into()), ("town".into(), "bonn".into())]);
        assert_eq!(targets[1].attributes[1].1, "köln, süd");
        assert!(read_targets_csv("id,d,v\n".as_bytes()).is_err());
    }
}
