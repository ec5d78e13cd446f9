//! Guess enumeration in order of increasing rank product.
//!
//! A guess picks `t` of the `n` attribute positions and one basis value for
//! each. All `C(n, t)` position subsets are interleaved in one global order
//! keyed by `(rank product, subset index, rank vector)`, where subsets are
//! numbered in lexicographic order. The key is a strict total order, so the
//! stream is fully deterministic.
//!
//! Within a subset the rank vectors form a tree: the parent of a vector is
//! obtained by decrementing its last coordinate that exceeds 1. A child
//! always has a strictly larger product than its parent, so a min-heap
//! seeded with the all-ones vector of every subset yields vectors in key
//! order while holding only the current frontier.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::freq::RankTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumeratedGuess {
    /// Index of the position subset in lexicographic order.
    pub subset: usize,
    /// 0-based attribute positions, ascending.
    pub positions: Vec<usize>,
    /// 1-based rank of the guessed value at each position.
    pub ranks: Vec<u32>,
    pub product: u128,
}

impl EnumeratedGuess {
    /// The guessed values, resolved against the rank table.
    pub fn values<'a>(&self, rt: &'a RankTable, descriptions: &[String]) -> Vec<&'a str> {
        self.positions
            .iter()
            .zip(&self.ranks)
            .map(|(&p, &r)| {
                rt.value_at(&descriptions[p], r)
                    .expect("enumerated ranks are within the table")
            })
            .collect()
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Node {
    product: u128,
    subset: usize,
    ranks: Box<[u32]>,
}

/// Iterator over guesses; see the module docs for the order.
#[derive(Debug)]
pub struct GuessStream {
    subsets: Vec<Vec<usize>>,
    /// Number of basis values at each position of each subset.
    limits: Vec<Vec<u32>>,
    heap: BinaryHeap<Reverse<Node>>,
    remaining: u64,
}

pub(crate) fn lexicographic_subsets(n: usize, t: usize) -> Vec<Vec<usize>> {
    if t == 0 || t > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..t).collect();
    loop {
        out.push(cur.clone());
        if !crate::store::next_subset(&mut cur, n) {
            return out;
        }
    }
}

fn product(ranks: &[u32]) -> u128 {
    ranks
        .iter()
        .fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
}

/// Streams at most `budget` guesses over the attributes described by
/// `descriptions`. Values absent from the basis are never produced, and a
/// subset containing a description with no basis values contributes nothing.
pub fn enumerate_guesses(
    rt: &RankTable,
    descriptions: &[String],
    t: usize,
    budget: u64,
) -> GuessStream {
    let subsets = lexicographic_subsets(descriptions.len(), t);
    let limits: Vec<Vec<u32>> = subsets
        .iter()
        .map(|s| s.iter().map(|&p| rt.len(&descriptions[p]) as u32).collect())
        .collect();
    let mut heap = BinaryHeap::new();
    for (i, lim) in limits.iter().enumerate() {
        if lim.iter().all(|&l| l > 0) {
            heap.push(Reverse(Node {
                product: 1,
                subset: i,
                ranks: vec![1; t].into_boxed_slice(),
            }));
        }
    }
    GuessStream {
        subsets,
        limits,
        heap,
        remaining: budget,
    }
}

impl Iterator for GuessStream {
    type Item = EnumeratedGuess;

    fn next(&mut self) -> Option<EnumeratedGuess> {
        if self.remaining == 0 {
            return None;
        }
        let Reverse(node) = self.heap.pop()?;
        self.remaining -= 1;

        let limits = &self.limits[node.subset];
        let last_raised = node.ranks.iter().rposition(|&r| r > 1).unwrap_or(0);
        for j in last_raised..node.ranks.len() {
            if node.ranks[j] < limits[j] {
                let mut ranks = node.ranks.clone();
                ranks[j] += 1;
                self.heap.push(Reverse(Node {
                    product: product(&ranks),
                    subset: node.subset,
                    ranks,
                }));
            }
        }
        Some(EnumeratedGuess {
            subset: node.subset,
            positions: self.subsets[node.subset].clone(),
            ranks: node.ranks.into_vec(),
            product: node.product,
        })
    }
}

/// Total number of guesses the stream can produce: the sum over position
/// subsets of the product of basis sizes. Saturates at `u128::MAX`.
pub fn search_space(rt: &RankTable, descriptions: &[String], t: usize) -> u128 {
    lexicographic_subsets(descriptions.len(), t)
        .iter()
        .map(|s| {
            s.iter()
                .fold(1u128, |acc, &p| acc.saturating_mul(rt.len(&descriptions[p]) as u128))
        })
        .fold(0u128, u128::saturating_add)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::freq::{build_ranks, FrequencyTable};
    use proptest::prelude::*;

    /// Materializes every guess and sorts by the documented key.
    fn brute_force(rt: &RankTable, descriptions: &[String], t: usize) -> Vec<EnumeratedGuess> {
        let mut all = Vec::new();
        for (si, subset) in lexicographic_subsets(descriptions.len(), t).into_iter().enumerate() {
            let sizes: Vec<u32> = subset.iter().map(|&p| rt.len(&descriptions[p]) as u32).collect();
            if sizes.contains(&0) {
                continue;
            }
            let mut ranks = vec![1u32; t];
            'outer: loop {
                all.push(EnumeratedGuess {
                    subset: si,
                    positions: subset.clone(),
                    ranks: ranks.clone(),
                    product: ranks.iter().map(|&r| r as u128).product(),
                });
                for k in (0..t).rev() {
                    ranks[k] += 1;
                    if ranks[k] <= sizes[k] {
                        continue 'outer;
                    }
                    ranks[k] = 1;
                }
                break;
            }
        }
        all.sort_by(|a, b| {
            (a.product, &a.positions, &a.ranks).cmp(&(b.product, &b.positions, &b.ranks))
        });
        all
    }

    fn rank_table(sizes: &[(&str, usize)]) -> RankTable {
        let rows: Vec<(String, String, f64)> = sizes
            .iter()
            .flat_map(|&(d, k)| {
                (0..k).map(move |i| (d.to_string(), format!("{d}{i}"), (k - i) as f64))
            })
            .collect();
        build_ranks(&FrequencyTable::<f64>::from_counts("t", rows).unwrap()).unwrap()
    }

    fn descs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn two_by_two_example() {
        let ft = FrequencyTable::<f64>::from_counts(
            "t",
            [("x", "a", 2.0), ("x", "b", 1.0), ("y", "c", 2.0), ("y", "d", 1.0)],
        )
        .unwrap();
        let rt = build_ranks(&ft).unwrap();
        let d = descs(&["x", "y"]);
        let got: Vec<(Vec<&str>, u128)> = enumerate_guesses(&rt, &d, 2, 100)
            .map(|g| (g.values(&rt, &d), g.product))
            .collect();
        // (a,d) has rank vector (1,2) which sorts before (b,c) = (2,1)
        assert_eq!(
            got,
            vec![
                (vec!["a", "c"], 1),
                (vec!["a", "d"], 2),
                (vec!["b", "c"], 2),
                (vec!["b", "d"], 4),
            ]
        );
    }

    #[test]
    fn single_attribute_in_rank_order() {
        let rt = rank_table(&[("x", 5)]);
        let d = descs(&["x"]);
        let ranks: Vec<u32> = enumerate_guesses(&rt, &d, 1, 100).map(|g| g.ranks[0]).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn zero_budget_is_empty() {
        let rt = rank_table(&[("x", 5)]);
        assert_eq!(enumerate_guesses(&rt, &descs(&["x"]), 1, 0).count(), 0);
        assert_eq!(enumerate_guesses(&rt, &descs(&["x"]), 1, 3).count(), 3);
        assert_eq!(enumerate_guesses(&rt, &descs(&["x"]), 2, 3).count(), 0);
    }

    #[test]
    fn missing_description_contributes_nothing() {
        let rt = rank_table(&[("x", 3), ("y", 2)]);
        let d = descs(&["x", "y", "nope"]);
        assert_eq!(search_space(&rt, &d, 2), 6);
        let all: Vec<_> = enumerate_guesses(&rt, &d, 2, 1000).collect();
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|g| g.positions == vec![0, 1]));
    }

    #[test]
    fn interleaves_subsets() {
        let rt = rank_table(&[("a", 3), ("b", 3), ("c", 3)]);
        let d = descs(&["a", "b", "c"]);
        let first: Vec<usize> = enumerate_guesses(&rt, &d, 2, 3).map(|g| g.subset).collect();
        assert_eq!(first, vec![0, 1, 2]);
        assert_eq!(search_space(&rt, &d, 2), 27);
    }

    proptest! {
        #[test]
        fn matches_sorted_brute_force(
            sizes in proptest::collection::vec(0usize..=6, 1..=4),
            t_pick in 0usize..4,
        ) {
            let names = ["a", "b", "c", "d"];
            let spec: Vec<(&str, usize)> = names.iter().zip(&sizes)
                .filter(|(_, &k)| k > 0).map(|(n, &k)| (*n, k)).collect();
            prop_assume!(!spec.is_empty());
            let rt = rank_table(&spec);
            let d = descs(&names[..sizes.len()]);
            let t = 1 + t_pick % d.len();
            let oracle = brute_force(&rt, &d, t);
            let got: Vec<_> = enumerate_guesses(&rt, &d, t, u64::MAX).collect();
            prop_assert_eq!(got.len() as u128, search_space(&rt, &d, t));
            for w in got.windows(2) {
                prop_assert!(w[0].product <= w[1].product);
            }
            prop_assert_eq!(got, oracle);
        }
    }
}
