//! Room-level reasoning: mine dominant sensor sets from time-windowed
//! activity transactions, grow them through the topology, and assign
//! bedrooms and the kitchen/dining room.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mining::{frequent_itemsets, Itemset, MinSupport, Transaction};
use crate::segmentation::IndoorActivity;
use crate::sensor_log::SensorId;
use crate::topology::Topology;

/// Half-open daily time window `[start, end)`, applied to every
/// calendar day of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    start: NaiveTime,
    end: NaiveTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WindowError {
    #[error("window start must lie before its end, got {0}")]
    Empty(String),
    #[error("expected HH:MM-HH:MM, got {0:?}")]
    Format(String),
}

impl TimeWindow {
    pub fn new(start: NaiveTime, end: NaiveTime) -> Result<Self, WindowError> {
        if start >= end {
            return Err(WindowError::Empty(format!("{start}-{end}")));
        }
        Ok(TimeWindow { start, end })
    }

    /// 02:00–06:00, when residents are very likely in a bedroom.
    pub fn bedroom_default() -> Self {
        TimeWindow::new(
            NaiveTime::from_hms_opt(2, 0, 0).unwrap(),
            NaiveTime::from_hms_opt(6, 0, 0).unwrap(),
        )
        .unwrap()
    }

    /// 18:00–19:00, the assumed dinner hour.
    pub fn kitchen_default() -> Self {
        TimeWindow::new(
            NaiveTime::from_hms_opt(18, 0, 0).unwrap(),
            NaiveTime::from_hms_opt(19, 0, 0).unwrap(),
        )
        .unwrap()
    }

    pub fn start(&self) -> NaiveTime {
        self.start
    }

    pub fn end(&self) -> NaiveTime {
        self.end
    }

    pub fn contains(&self, time: NaiveTime) -> bool {
        self.start <= time && time < self.end
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}",
            self.start.format("%H:%M"),
            self.end.format("%H:%M")
        )
    }
}

/// Parses `HH:MM-HH:MM` (seconds optional: `HH:MM:SS-HH:MM:SS`).
impl FromStr for TimeWindow {
    type Err = WindowError;

    fn from_str(text: &str) -> Result<Self, WindowError> {
        let bad = || WindowError::Format(text.to_string());
        let (start, end) = text.split_once('-').ok_or_else(bad)?;
        let parse = |part: &str| {
            NaiveTime::parse_from_str(part.trim(), "%H:%M:%S")
                .or_else(|_| NaiveTime::parse_from_str(part.trim(), "%H:%M"))
                .map_err(|_| bad())
        };
        TimeWindow::new(parse(start)?, parse(end)?)
            .map_err(|_| WindowError::Empty(text.to_string()))
    }
}

/// One transaction per activity whose **start** time-of-day falls in the
/// window: the set of distinct sensors the activity triggered.
pub fn collect_window_transactions(
    activities: &[IndoorActivity],
    window: &TimeWindow,
) -> Vec<Transaction> {
    activities
        .iter()
        .filter(|activity| window.contains(activity.start().time()))
        .map(|activity| activity.sensor_set())
        .collect()
}

/// Grows `seed` to a fixpoint: each round simultaneously admits every
/// sensor outside the set (and outside `excluded`) whose topology
/// neighbors cover at least half of the current set (2·k ≥ |B|, both
/// edge classes counting). Returns the final set.
pub fn expand_with_topology(
    seed: &BTreeSet<SensorId>,
    topology: &Topology,
    excluded: &BTreeSet<SensorId>,
) -> BTreeSet<SensorId> {
    let mut current = seed.clone();
    if current.is_empty() {
        return current;
    }
    loop {
        let joiners: Vec<SensorId> = topology
            .sensors()
            .into_iter()
            .filter(|candidate| !current.contains(candidate) && !excluded.contains(candidate))
            .filter(|candidate| {
                let linked = topology.neighbors(candidate).intersection(&current).count();
                2 * linked >= current.len()
            })
            .collect();
        if joiners.is_empty() {
            return current;
        }
        current.extend(joiners);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomLabel {
    Bedroom(usize),
    KitchenDining,
}

impl fmt::Display for RoomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoomLabel::Bedroom(i) => write!(f, "bedroom-{i}"),
            RoomLabel::KitchenDining => write!(f, "kitchen-dining"),
        }
    }
}

/// A deduced room: the mined seed set, the topology-expanded final set,
/// and the mining evidence behind the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoomAssignment {
    pub label: RoomLabel,
    pub seed: Itemset,
    pub sensors: BTreeSet<SensorId>,
    /// Transactions containing the seed when it was selected.
    pub support_count: usize,
    /// Transactions mined when the seed was selected.
    pub transaction_count: usize,
}

impl RoomAssignment {
    /// Sensors contributed by expansion rather than mining.
    pub fn added_by_expansion(&self) -> BTreeSet<SensorId> {
        self.sensors.difference(&self.seed).cloned().collect()
    }
}

/// Bedroom loop: mine the window's transactions, take the dominant set,
/// stop when it is absent or a singleton; otherwise expand it into a
/// bedroom, discard every transaction touching the expanded set, and
/// repeat for the next bedroom.
pub fn deduce_bedrooms(
    activities: &[IndoorActivity],
    topology: &Topology,
    window: &TimeWindow,
    min_support: MinSupport,
) -> Vec<RoomAssignment> {
    let mut transactions = collect_window_transactions(activities, window);
    let mut assigned: BTreeSet<SensorId> = BTreeSet::new();
    let mut rooms = Vec::new();
    loop {
        let mined = frequent_itemsets(&transactions, min_support);
        let Some((seed, support_count)) = mined.dominant() else {
            break;
        };
        if seed.len() <= 1 {
            break;
        }
        let sensors = expand_with_topology(&seed, topology, &assigned);
        assigned.extend(sensors.iter().cloned());
        transactions.retain(|t| t.is_disjoint(&sensors));
        rooms.push(RoomAssignment {
            label: RoomLabel::Bedroom(rooms.len() + 1),
            seed,
            sensors,
            support_count,
            transaction_count: mined.transaction_count,
        });
    }
    rooms
}

/// Kitchen/dining pass: one mining round over the window's
/// transactions; `excluded` (normally the union of bedroom sensors) is
/// barred from expansion but not from mining.
pub fn deduce_kitchen(
    activities: &[IndoorActivity],
    topology: &Topology,
    window: &TimeWindow,
    min_support: MinSupport,
    excluded: &BTreeSet<SensorId>,
) -> Option<RoomAssignment> {
    let transactions = collect_window_transactions(activities, window);
    let mined = frequent_itemsets(&transactions, min_support);
    let (seed, support_count) = mined.dominant()?;
    if seed.len() <= 1 {
        return None;
    }
    let sensors = expand_with_topology(&seed, topology, excluded);
    Some(RoomAssignment {
        label: RoomLabel::KitchenDining,
        seed,
        sensors,
        support_count,
        transaction_count: mined.transaction_count,
    })
}
