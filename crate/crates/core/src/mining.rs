//! Frequent-itemset mining over sensor-id transactions (Apriori with
//! level-wise candidate generation), plus dominant-itemset selection.
//!
//! Support thresholds are exact rationals so that boundary cases like
//! `2 of 4 at 0.5` never depend on floating-point rounding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor_log::SensorId;

pub type Itemset = BTreeSet<SensorId>;
pub type Transaction = BTreeSet<SensorId>;

/// Relative support threshold as an exact fraction in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinSupport {
    numerator: u64,
    denominator: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MiningError {
    #[error("minimum support must be a fraction in (0, 1], got {0}")]
    InvalidSupport(String),
}

impl MinSupport {
    /// Builds and reduces the fraction, so `5/10` and `1/2` compare equal.
    pub fn from_ratio(numerator: u64, denominator: u64) -> Result<Self, MiningError> {
        if numerator == 0 || denominator == 0 || numerator > denominator {
            return Err(MiningError::InvalidSupport(format!(
                "{numerator}/{denominator}"
            )));
        }
        let divisor = gcd(numerator, denominator);
        Ok(MinSupport {
            numerator: numerator / divisor,
            denominator: denominator / divisor,
        })
    }

    /// Inclusive test: does `count` of `total` transactions reach the
    /// threshold? Evaluated as `count * den >= num * total` in wide
    /// integers, so it is exact for any realistic input size.
    pub fn admits(&self, count: usize, total: usize) -> bool {
        (count as u128) * u128::from(self.denominator)
            >= u128::from(self.numerator) * (total as u128)
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for MinSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Parses decimal (`0.5`, `.35`, `1`) or fraction (`1/2`) notation.
impl FromStr for MinSupport {
    type Err = MiningError;

    fn from_str(text: &str) -> Result<Self, MiningError> {
        let invalid = || MiningError::InvalidSupport(text.to_string());
        if let Some((num, den)) = text.split_once('/') {
            let num: u64 = num.trim().parse().map_err(|_| invalid())?;
            let den: u64 = den.trim().parse().map_err(|_| invalid())?;
            return MinSupport::from_ratio(num, den).map_err(|_| invalid());
        }
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if frac_part.len() > 9 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(invalid());
        }
        let int_value: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| invalid())?
        };
        let scale = 10u64.pow(frac_part.len() as u32);
        let frac_value: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| invalid())?
        };
        let numerator = int_value
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac_value))
            .ok_or_else(invalid)?;
        MinSupport::from_ratio(numerator, scale).map_err(|_| invalid())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Every frequent itemset with its absolute support count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedItemsets {
    pub frequent: BTreeMap<Itemset, usize>,
    pub transaction_count: usize,
    pub min_support: MinSupport,
}

impl MinedItemsets {
    /// Picks the dominant itemset: largest cardinality, then highest
    /// support count, then lexicographically smallest id sequence.
    pub fn dominant(&self) -> Option<(Itemset, usize)> {
        let mut best: Option<(&Itemset, usize)> = None;
        for (set, &count) in &self.frequent {
            let wins = match best {
                None => true,
                Some((best_set, best_count)) => (set.len(), count) > (best_set.len(), best_count),
            };
            if wins {
                best = Some((set, count));
            }
        }
        best.map(|(set, count)| (set.clone(), count))
    }
}

/// Mines all frequent itemsets of the transactions at the given
/// threshold, level-wise: frequent singles, then joined candidates whose
/// every subset stayed frequent.
pub fn frequent_itemsets(transactions: &[Transaction], min_support: MinSupport) -> MinedItemsets {
    let total = transactions.len();
    let mut frequent: BTreeMap<Itemset, usize> = BTreeMap::new();

    let mut item_counts: BTreeMap<SensorId, usize> = BTreeMap::new();
    for transaction in transactions {
        for item in transaction {
            *item_counts.entry(item.clone()).or_default() += 1;
        }
    }
    let mut level: Vec<Vec<SensorId>> = Vec::new();
    for (item, count) in item_counts {
        if min_support.admits(count, total) {
            frequent.insert([item.clone()].into_iter().collect(), count);
            level.push(vec![item]);
        }
    }

    while level.len() > 1 {
        let prior: BTreeSet<&[SensorId]> = level.iter().map(Vec::as_slice).collect();
        let mut next: Vec<Vec<SensorId>> = Vec::new();
        for (i, left) in level.iter().enumerate() {
            for right in &level[i + 1..] {
                let k = left.len();
                // `level` is sorted, so equal-prefix partners are adjacent.
                if left[..k - 1] != right[..k - 1] {
                    break;
                }
                let mut candidate = left.clone();
                candidate.push(right[k - 1].clone());
                if !all_subsets_frequent(&candidate, &prior) {
                    continue;
                }
                let count = transactions
                    .iter()
                    .filter(|t| candidate.iter().all(|item| t.contains(item)))
                    .count();
                if min_support.admits(count, total) {
                    frequent.insert(candidate.iter().cloned().collect(), count);
                    next.push(candidate);
                }
            }
        }
        level = next;
    }

    MinedItemsets {
        frequent,
        transaction_count: total,
        min_support,
    }
}

fn all_subsets_frequent(candidate: &[SensorId], prior: &BTreeSet<&[SensorId]>) -> bool {
    // The two subsets dropping one of the final elements are the join
    // parents, so only the remaining k-1 need checking.
    let mut subset: Vec<SensorId> = Vec::with_capacity(candidate.len() - 1);
    for skip in 0..candidate.len().saturating_sub(2) {
        subset.clear();
        subset.extend(
            candidate
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, item)| item.clone()),
        );
        if !prior.contains(subset.as_slice()) {
            return false;
        }
    }
    true
}
