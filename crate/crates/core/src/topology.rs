//! Directed confidence graph over sensor transitions and the undirected
//! topology derived from it: an edge is kept when its directed
//! occurrence counts clear the mean-confidence threshold α = ⌊β/γ⌋.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmentation::IndoorActivity;
use crate::sensor_log::SensorId;

/// Ordered sensor pair `(from, to)`.
pub type DirectedPair = (SensorId, SensorId);

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("self-pair {0} is not a valid edge")]
    SelfPair(SensorId),
    #[error("directed pair {0}->{1} has occurrence count 0")]
    ZeroCount(SensorId, SensorId),
    #[error("sensor {0} appears in the topology but not in the ground-truth layout")]
    UnknownSensor(SensorId),
    #[error("layout pair [{0}, {1}] references a sensor missing from the sensor list")]
    UnknownLayoutSensor(SensorId, SensorId),
    #[error("cannot read layout {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed layout {path}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// How transitions inside one activity feed the confidence counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCounting {
    /// Each activity contributes its deduplicated edge set: a directed
    /// pair gains at most 1 per activity.
    #[default]
    SetPerActivity,
    /// Every transition counts, including repeats within one activity.
    MultisetTransitions,
}

/// The directed pairs traversed by one activity, deduplicated.
/// Consecutive events of the same sensor contribute nothing.
pub fn extract_edges(activity: &IndoorActivity) -> BTreeSet<DirectedPair> {
    let mut edges = BTreeSet::new();
    for pair in activity.events().windows(2) {
        if pair[0].sensor != pair[1].sensor {
            edges.insert((pair[0].sensor.clone(), pair[1].sensor.clone()));
        }
    }
    edges
}

/// Directed transition counts with the derived threshold statistics:
/// β is the count total, γ the number of distinct directed pairs, and
/// α = ⌊β/γ⌋ (undefined for an edgeless graph).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfidenceGraph {
    counts: BTreeMap<DirectedPair, u64>,
    beta: u64,
    gamma: usize,
    alpha: Option<u64>,
}

impl ConfidenceGraph {
    /// Builds a graph from explicit counts; every pair must be a
    /// non-self pair with count ≥ 1.
    pub fn from_counts(counts: BTreeMap<DirectedPair, u64>) -> Result<Self, TopologyError> {
        for ((from, to), &count) in &counts {
            if from == to {
                return Err(TopologyError::SelfPair(from.clone()));
            }
            if count == 0 {
                return Err(TopologyError::ZeroCount(from.clone(), to.clone()));
            }
        }
        let beta: u64 = counts.values().sum();
        let gamma = counts.len();
        let alpha = if gamma > 0 {
            Some(beta / gamma as u64)
        } else {
            None
        };
        Ok(ConfidenceGraph {
            counts,
            beta,
            gamma,
            alpha,
        })
    }

    pub fn counts(&self) -> &BTreeMap<DirectedPair, u64> {
        &self.counts
    }

    pub fn count(&self, from: &SensorId, to: &SensorId) -> u64 {
        self.counts
            .get(&(from.clone(), to.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn beta(&self) -> u64 {
        self.beta
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn alpha(&self) -> Option<u64> {
        self.alpha
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Every sensor appearing on either end of a counted pair.
    pub fn sensors(&self) -> BTreeSet<SensorId> {
        self.counts
            .keys()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect()
    }
}

/// Accumulates confidence counts over all activities.
pub fn build_confidence_graph(
    activities: &[IndoorActivity],
    counting: EdgeCounting,
) -> ConfidenceGraph {
    let mut counts: BTreeMap<DirectedPair, u64> = BTreeMap::new();
    for activity in activities {
        match counting {
            EdgeCounting::SetPerActivity => {
                for edge in extract_edges(activity) {
                    *counts.entry(edge).or_default() += 1;
                }
            }
            EdgeCounting::MultisetTransitions => {
                for pair in activity.events().windows(2) {
                    if pair[0].sensor != pair[1].sensor {
                        *counts
                            .entry((pair[0].sensor.clone(), pair[1].sensor.clone()))
                            .or_default() += 1;
                    }
                }
            }
        }
    }
    ConfidenceGraph::from_counts(counts).expect("accumulated counts are valid by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    /// Both directed counts exceed α: movement in both directions.
    Solid,
    /// Exactly one directed count exceeds α.
    Dashed,
}

/// Undirected sensor graph keyed by ordered `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    edges: BTreeMap<(SensorId, SensorId), EdgeClass>,
}

fn unordered(a: &SensorId, b: &SensorId) -> (SensorId, SensorId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl Topology {
    pub fn edges(&self) -> &BTreeMap<(SensorId, SensorId), EdgeClass> {
        &self.edges
    }

    pub fn edge_class(&self, a: &SensorId, b: &SensorId) -> Option<EdgeClass> {
        self.edges.get(&unordered(a, b)).copied()
    }

    pub fn has_edge(&self, a: &SensorId, b: &SensorId) -> bool {
        self.edge_class(a, b).is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// All sensors incident to at least one edge.
    pub fn sensors(&self) -> BTreeSet<SensorId> {
        self.edges
            .keys()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect()
    }

    /// Sensors sharing an edge (of either class) with `sensor`.
    pub fn neighbors(&self, sensor: &SensorId) -> BTreeSet<SensorId> {
        self.edges
            .keys()
            .filter_map(|(a, b)| {
                if a == sensor {
                    Some(b.clone())
                } else if b == sensor {
                    Some(a.clone())
                } else {
                    None
                }
            })
            .collect()
    }
}

pub(crate) fn classify_edges(
    counts: &BTreeMap<DirectedPair, u64>,
    alpha: u64,
) -> BTreeMap<(SensorId, SensorId), EdgeClass> {
    let mut edges = BTreeMap::new();
    for (from, to) in counts.keys() {
        let key = unordered(from, to);
        if edges.contains_key(&key) {
            continue;
        }
        let forward = counts
            .get(&(key.0.clone(), key.1.clone()))
            .copied()
            .unwrap_or(0);
        let backward = counts
            .get(&(key.1.clone(), key.0.clone()))
            .copied()
            .unwrap_or(0);
        let class = match (forward > alpha, backward > alpha) {
            (true, true) => Some(EdgeClass::Solid),
            (true, false) | (false, true) => Some(EdgeClass::Dashed),
            (false, false) => None,
        };
        if let Some(class) = class {
            edges.insert(key, class);
        }
    }
    edges
}

/// Applies the two edge rules: solid when both directions exceed α,
/// dashed when exactly one does. Comparisons are strict.
pub fn derive_topology(graph: &ConfidenceGraph) -> Topology {
    let Some(alpha) = graph.alpha() else {
        return Topology::default();
    };
    Topology {
        edges: classify_edges(graph.counts(), alpha),
    }
}

/// Renders the topology as DOT text: one node per sensor of the
/// confidence graph, one undirected edge per topology pair, styled by
/// class and labeled with the two directed counts. Output ordering is
/// lexicographic, so identical inputs give identical text.
pub fn export_dot(topology: &Topology, graph: &ConfidenceGraph) -> String {
    let mut out = String::from("graph topology {\n");
    for sensor in graph.sensors() {
        out.push_str(&format!("  \"{sensor}\";\n"));
    }
    for ((a, b), class) in topology.edges() {
        let style = match class {
            EdgeClass::Solid => "solid",
            EdgeClass::Dashed => "dashed",
        };
        out.push_str(&format!(
            "  \"{a}\" -- \"{b}\" [style={style}, label=\"{}/{}\"];\n",
            graph.count(a, b),
            graph.count(b, a),
        ));
    }
    out.push_str("}\n");
    out
}

#[derive(Deserialize, Serialize)]
struct LayoutFile {
    sensors: Vec<String>,
    adjacent: Vec<[String; 2]>,
}

/// A home's true sensor set and which sensor pairs are directly
/// reachable from one another, used as evaluation ground truth and as
/// the walk graph for synthetic traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthLayout {
    sensors: BTreeSet<SensorId>,
    adjacent: BTreeSet<(SensorId, SensorId)>,
}

impl GroundTruthLayout {
    pub fn new(
        sensors: impl IntoIterator<Item = SensorId>,
        pairs: impl IntoIterator<Item = (SensorId, SensorId)>,
    ) -> Result<Self, TopologyError> {
        let sensors: BTreeSet<SensorId> = sensors.into_iter().collect();
        let mut adjacent = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(TopologyError::SelfPair(a));
            }
            if !sensors.contains(&a) || !sensors.contains(&b) {
                return Err(TopologyError::UnknownLayoutSensor(a, b));
            }
            adjacent.insert(unordered(&a, &b));
        }
        Ok(GroundTruthLayout { sensors, adjacent })
    }

    /// Reads a JSON document `{"sensors": [...], "adjacent": [["A","B"], ...]}`.
    pub fn load(path: &Path) -> Result<Self, TopologyError> {
        let text = std::fs::read_to_string(path).map_err(|source| TopologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: LayoutFile =
            serde_json::from_str(&text).map_err(|source| TopologyError::Json {
                path: path.display().to_string(),
                source,
            })?;
        GroundTruthLayout::new(
            file.sensors.into_iter().map(SensorId::new),
            file.adjacent
                .into_iter()
                .map(|[a, b]| (SensorId::new(a), SensorId::new(b))),
        )
    }

    pub fn to_json(&self) -> String {
        let file = LayoutFile {
            sensors: self.sensors.iter().map(|s| s.to_string()).collect(),
            adjacent: self
                .adjacent
                .iter()
                .map(|(a, b)| [a.to_string(), b.to_string()])
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("layout serializes")
    }

    pub fn sensors(&self) -> &BTreeSet<SensorId> {
        &self.sensors
    }

    pub fn adjacent_pairs(&self) -> &BTreeSet<(SensorId, SensorId)> {
        &self.adjacent
    }

    pub fn is_adjacent(&self, a: &SensorId, b: &SensorId) -> bool {
        self.adjacent.contains(&unordered(a, b))
    }

    pub fn neighbors(&self, sensor: &SensorId) -> BTreeSet<SensorId> {
        self.adjacent
            .iter()
            .filter_map(|(a, b)| {
                if a == sensor {
                    Some(b.clone())
                } else if b == sensor {
                    Some(a.clone())
                } else {
                    None
                }
            })
            .collect()
    }

    /// True when every listed sensor can reach every other through
    /// adjacent pairs, considering only sensors in `within` (or all).
    pub fn is_connected(&self, within: Option<&BTreeSet<SensorId>>) -> bool {
        let nodes: BTreeSet<&SensorId> = match within {
            Some(subset) => subset.iter().collect(),
            None => self.sensors.iter().collect(),
        };
        let Some(&start) = nodes.iter().next() else {
            return true;
        };
        let mut seen: BTreeSet<&SensorId> = BTreeSet::new();
        seen.insert(start);
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for next in self.neighbors(node) {
                if let Some(&next_ref) = nodes.get(&next) {
                    if seen.insert(next_ref) {
                        stack.push(next_ref);
                    }
                }
            }
        }
        seen.len() == nodes.len()
    }
}

/// Per-ordered-pair agreement totals between deduced topology and
/// layout ground truth. The first digit of each class name is layout
/// reachability, the second is whether the topology deduced an edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    /// 1/1 — reachable and deduced.
    pub reachable_deduced: usize,
    /// 1/0 — reachable but missed.
    pub reachable_missed: usize,
    /// 0/0 — unreachable and not deduced.
    pub unreachable_rejected: usize,
    /// 0/1 — unreachable but deduced anyway.
    pub unreachable_deduced: usize,
    /// n, the number of ground-truth sensors.
    pub sensor_count: usize,
}

impl ConfusionReport {
    pub fn total_pairs(&self) -> usize {
        self.reachable_deduced
            + self.reachable_missed
            + self.unreachable_rejected
            + self.unreachable_deduced
    }

    pub fn false_deductions(&self) -> usize {
        self.reachable_missed + self.unreachable_deduced
    }

    /// 1 − false / (n² − n); an empty pair universe counts as accurate.
    pub fn accuracy(&self) -> f64 {
        let total = self.total_pairs();
        if total == 0 {
            return 1.0;
        }
        1.0 - self.false_deductions() as f64 / total as f64
    }
}

impl fmt::Display for ConfusionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "1/1={} 1/0={} 0/0={} 0/1={} accuracy={:.4}",
            self.reachable_deduced,
            self.reachable_missed,
            self.unreachable_rejected,
            self.unreachable_deduced,
            self.accuracy()
        )
    }
}

/// Classifies every ordered pair of ground-truth sensors. An edge of
/// either class counts as "deduced"; direction is ignored because
/// topology edges are undirected.
pub fn evaluate_against_layout(
    topology: &Topology,
    truth: &GroundTruthLayout,
) -> Result<ConfusionReport, TopologyError> {
    for sensor in topology.sensors() {
        if !truth.sensors().contains(&sensor) {
            return Err(TopologyError::UnknownSensor(sensor));
        }
    }
    let mut report = ConfusionReport {
        reachable_deduced: 0,
        reachable_missed: 0,
        unreachable_rejected: 0,
        unreachable_deduced: 0,
        sensor_count: truth.sensors().len(),
    };
    for a in truth.sensors() {
        for b in truth.sensors() {
            if a == b {
                continue;
            }
            let reachable = truth.is_adjacent(a, b);
            let deduced = topology.has_edge(a, b);
            match (reachable, deduced) {
                (true, true) => report.reachable_deduced += 1,
                (true, false) => report.reachable_missed += 1,
                (false, false) => report.unreachable_rejected += 1,
                (false, true) => report.unreachable_deduced += 1,
            }
        }
    }
    Ok(report)
}
