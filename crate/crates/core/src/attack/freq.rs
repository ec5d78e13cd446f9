//! Per-description value distributions and the rank tables derived from
//! them.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::normalize::normalize;
use crate::num::Real;

/// Value distribution per attribute description. Descriptions and values
/// are stored normalized; probabilities per description sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable<R> {
    label: String,
    tables: BTreeMap<String, BTreeMap<String, R>>,
}

#[derive(Deserialize)]
struct CsvRow {
    description: String,
    value: String,
    count: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    label: String,
    descriptions: BTreeMap<String, BTreeMap<String, f64>>,
}

fn norm(s: &str, what: &str) -> Result<String, AttackError> {
    normalize(s).map_err(|_| AttackError::Input(format!("empty {what}")))
}

impl<R: Real> FrequencyTable<R> {
    /// Builds a table from raw `(description, value, count)` rows. Counts
    /// may be integers or probabilities; repeated pairs are summed.
    pub fn from_counts<I, D, V>(label: impl Into<String>, rows: I) -> Result<Self, AttackError>
    where
        I: IntoIterator<Item = (D, V, f64)>,
        D: AsRef<str>,
        V: AsRef<str>,
    {
        let mut raw: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (d, v, count) in rows {
            let description = norm(d.as_ref(), "description")?;
            if !(count.is_finite() && count > 0.0) {
                return Err(AttackError::InvalidCount { description, count });
            }
            *raw.entry(description)
                .or_default()
                .entry(norm(v.as_ref(), "value")?)
                .or_insert(0.0) += count;
        }
        if raw.is_empty() {
            return Err(AttackError::EmptyTable);
        }
        let tables = raw
            .into_iter()
            .map(|(d, values)| {
                let total: f64 = values.values().sum();
                let probs = values
                    .into_iter()
                    .map(|(v, c)| (v, R::of_f64(c / total)))
                    .collect();
                (d, probs)
            })
            .collect();
        Ok(FrequencyTable {
            label: label.into(),
            tables,
        })
    }

    /// CSV with header `description,value,count`.
    pub fn from_csv<Rd: Read>(label: impl Into<String>, reader: Rd) -> Result<Self, AttackError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::None).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["description", "value", "count"] {
            return Err(AttackError::Input(
                "expected header `description,value,count`".into(),
            ));
        }
        let rows = rdr
            .deserialize::<CsvRow>()
            .map(|r| r.map(|row| (row.description, row.value, row.count)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_counts(label, rows)
    }

    /// `{"label": ..., "descriptions": {"<description>": {"<value>": count}}}`
    pub fn from_json(text: &str) -> Result<Self, AttackError> {
        let parsed: JsonTable =
            serde_json::from_str(text).map_err(|e| AttackError::Input(e.to_string()))?;
        let rows = parsed.descriptions.into_iter().flat_map(|(d, values)| {
            values.into_iter().map(move |(v, c)| (d.clone(), v, c))
        });
        Self::from_counts(parsed.label, rows)
    }

    pub fn to_json(&self) -> String {
        let descriptions = self
            .tables
            .iter()
            .map(|(d, values)| {
                let values = values
                    .iter()
                    .map(|(v, p)| (v.clone(), p.to_f64().unwrap_or(0.0)))
                    .collect();
                (d.clone(), values)
            })
            .collect();
        serde_json::to_string(&JsonTable {
            label: self.label.clone(),
            descriptions,
        })
        .expect("table serialization is infallible")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn descriptions(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn values(&self, description: &str) -> Option<&BTreeMap<String, R>> {
        self.tables.get(description)
    }

    pub fn probability(&self, description: &str, value: &str) -> Option<R> {
        self.tables.get(description)?.get(value).copied()
    }

    /// Keeps only the pairs accepted by `keep` and renormalizes.
    pub fn restrict(
        &self,
        label: impl Into<String>,
        mut keep: impl FnMut(&str, &str) -> bool,
    ) -> Result<Self, AttackError> {
        let rows: Vec<(String, String, f64)> = self
            .tables
            .iter()
            .flat_map(|(d, values)| values.iter().map(move |(v, p)| (d, v, p)))
            .filter(|(d, v, _)| keep(d, v))
            .map(|(d, v, p)| (d.clone(), v.clone(), p.to_f64().unwrap_or(0.0)))
            .collect();
        Self::from_counts(label, rows)
    }
}

/// How equal probabilities are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Equal probabilities are ranked by ascending value string.
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Ranked {
    ordered: Vec<String>,
    index: HashMap<String, u32>,
}

/// Rank of every basis value within its description: 1 is most likely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    ranked: BTreeMap<String, Ranked>,
    tie_break: TieBreak,
}

impl RankTable {
    pub fn tie_break(&self) -> TieBreak {
        self.tie_break
    }

    pub fn contains_description(&self, description: &str) -> bool {
        self.ranked.contains_key(description)
    }

    pub fn rank(&self, description: &str, value: &str) -> Option<u32> {
        self.ranked.get(description)?.index.get(value).copied()
    }

    /// Number of ranked values for `description` (zero if unknown).
    pub fn len(&self, description: &str) -> usize {
        self.ranked.get(description).map_or(0, |r| r.ordered.len())
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn value_at(&self, description: &str, rank: u32) -> Option<&str> {
        let r = self.ranked.get(description)?;
        r.ordered.get(rank.checked_sub(1)? as usize).map(String::as_str)
    }
}

pub fn build_ranks<R: Real>(ft: &FrequencyTable<R>) -> Result<RankTable, AttackError> {
    if ft.tables.is_empty() {
        return Err(AttackError::EmptyTable);
    }
    let mut ranked = BTreeMap::new();
    for (d, values) in &ft.tables {
        if values.is_empty() {
            return Err(AttackError::EmptyDescription(d.clone()));
        }
        let mut entries: Vec<(&String, R)> = values.iter().map(|(v, &p)| (v, p)).collect();
        entries.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
        });
        let ordered: Vec<String> = entries.into_iter().map(|(v, _)| v.clone()).collect();
        let index = ordered
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32 + 1))
            .collect();
        ranked.insert(d.clone(), Ranked { ordered, index });
    }
    Ok(RankTable {
        ranked,
        tie_break: TieBreak::Lexicographic,
    })
}

/// Product of the ranks of the guessed values: the estimated position of
/// the guess in the attacker's order (a lower bound on the true one).
/// Saturates at `u128::MAX`.
pub fn rank_product<D: AsRef<str>, V: AsRef<str>>(
    guess: &[(D, V)],
    rt: &RankTable,
) -> Result<u128, AttackError> {
    guess.iter().try_fold(1u128, |acc, (d, v)| {
        let (d, v) = (d.as_ref(), v.as_ref());
        rt.rank(d, v)
            .map(|r| acc.saturating_mul(r as u128))
            .ok_or_else(|| AttackError::ValueNotInBasis {
                description: d.to_owned(),
                value: v.to_owned(),
            })
    })
}
