//! Slow, obviously-correct reference implementations. They exist to
//! cross-check the optimized pipeline in tests and benchmarks and are
//! not meant for production-size inputs.

use std::collections::{BTreeMap, BTreeSet};

use crate::mining::{Itemset, MinSupport, Transaction};
use crate::segmentation::{IndoorActivity, SegmentParams};
use crate::sensor_log::{EventStream, SensorEvent, SensorId};

fn gap_us(a: &SensorEvent, b: &SensorEvent) -> i64 {
    (b.timestamp - a.timestamp)
        .num_microseconds()
        .expect("event gap fits in i64 microseconds")
}

/// Quadratic segmentation: tests every `[i, j]` interval of the stream
/// for gap-cohesion, two-sided maximality, and the duration bound.
pub fn segment_naive(stream: &EventStream, params: &SegmentParams) -> Vec<IndoorActivity> {
    let events = stream.events();
    let n = events.len();
    let mut activities = Vec::new();
    for i in 0..n {
        for j in i..n {
            let cohesive =
                (i..j).all(|k| gap_us(&events[k], &events[k + 1]) <= params.max_gap_us());
            if !cohesive {
                continue;
            }
            let maximal_left = i == 0 || gap_us(&events[i - 1], &events[i]) > params.max_gap_us();
            let maximal_right =
                j == n - 1 || gap_us(&events[j], &events[j + 1]) > params.max_gap_us();
            if !(maximal_left && maximal_right) {
                continue;
            }
            if gap_us(&events[i], &events[j]) >= params.min_duration_us() {
                activities.push(IndoorActivity::from_run(events[i..=j].to_vec()));
            }
        }
    }
    activities
}

/// Exhaustive miner: enumerates every non-empty subset of the item
/// universe and counts containment directly. Usable up to ~20 items.
pub fn frequent_itemsets_bruteforce(
    transactions: &[Transaction],
    min_support: MinSupport,
) -> BTreeMap<Itemset, usize> {
    let universe: Vec<SensorId> = transactions
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(
        universe.len() <= 20,
        "brute-force miner is limited to 20 distinct items, got {}",
        universe.len()
    );
    let total = transactions.len();
    let mut frequent = BTreeMap::new();
    for mask in 1u32..(1u32 << universe.len()) {
        let itemset: Itemset = universe
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, item)| item.clone())
            .collect();
        let count = transactions.iter().filter(|t| itemset.is_subset(t)).count();
        if min_support.admits(count, total) {
            frequent.insert(itemset, count);
        }
    }
    frequent
}
