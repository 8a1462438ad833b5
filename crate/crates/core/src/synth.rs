//! Seeded synthetic trace generation: a single walker moves along the
//! edges of a known layout on a daily schedule, emitting the same log
//! events the ingestion module parses. Because the layout is known, the
//! generated stream doubles as ground truth for end-to-end tests.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate, NaiveTime};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sensor_log::{EventStream, SensorEvent, SensorId};
use crate::topology::GroundTruthLayout;

/// One daily schedule slot: at `at`, perform `walks` walks of `steps`
/// steps (falling back to the params-wide step count), optionally
/// confined to the `within` sensors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub at: NaiveTime,
    pub walks: u32,
    pub steps: Option<u32>,
    pub within: Option<BTreeSet<SensorId>>,
}

impl ScheduleEntry {
    pub fn new(at: NaiveTime, walks: u32) -> Self {
        ScheduleEntry {
            at,
            walks,
            steps: None,
            within: None,
        }
    }

    pub fn with_steps(mut self, steps: u32) -> Self {
        self.steps = Some(steps);
        self
    }

    pub fn within(mut self, sensors: impl IntoIterator<Item = SensorId>) -> Self {
        self.within = Some(sensors.into_iter().collect());
        self
    }
}

/// Walk generation parameters. `dwell` separates successive triggers of
/// one walk (keep it ≤ the segmentation gap bound y so a walk stays one
/// activity); `rest_gap` separates walks (keep it > y so walks split).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkParams {
    pub seed: u64,
    pub steps: u32,
    pub dwell_us: i64,
    pub rest_gap_us: i64,
    pub start_date: NaiveDate,
    pub days: u32,
    pub schedule: Vec<ScheduleEntry>,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            seed: 0,
            steps: 10,
            dwell_us: 5_000_000,
            rest_gap_us: 60_000_000,
            start_date: NaiveDate::from_ymd_opt(2009, 10, 16).unwrap(),
            days: 1,
            schedule: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error(
        "dwell must satisfy 0 <= dwell < rest_gap, got dwell={dwell_us}us rest_gap={rest_gap_us}us"
    )]
    InvalidTiming { dwell_us: i64, rest_gap_us: i64 },
    #[error("schedule entry {entry} restricts the walk to an empty sensor set")]
    EmptySubgraph { entry: usize },
    #[error("schedule entry {entry} references sensor {sensor} missing from the layout")]
    UnknownSensor { entry: usize, sensor: SensorId },
    #[error("schedule entry {entry} walks a disconnected subgraph")]
    Disconnected { entry: usize },
    #[error("layout has no sensors to walk")]
    EmptyLayout,
}

fn noon() -> NaiveTime {
    NaiveTime::from_hms_opt(12, 0, 0).unwrap()
}

/// A rows×cols grid layout: sensors `M001..` numbered row-major with
/// 4-neighbor adjacency. Handy as a known walkable floor plan.
pub fn grid_layout(rows: u32, cols: u32) -> GroundTruthLayout {
    let id_at = |r: u32, c: u32| SensorId::new(format!("M{:03}", r * cols + c + 1));
    let mut sensors = Vec::new();
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            sensors.push(id_at(r, c));
            if c + 1 < cols {
                pairs.push((id_at(r, c), id_at(r, c + 1)));
            }
            if r + 1 < rows {
                pairs.push((id_at(r, c), id_at(r + 1, c)));
            }
        }
    }
    GroundTruthLayout::new(sensors, pairs).expect("grid layouts are valid")
}

/// Simulates the walker and returns the resulting event stream.
/// Identical inputs give bit-identical streams.
pub fn generate_trace(
    layout: &GroundTruthLayout,
    params: &WalkParams,
) -> Result<EventStream, SynthError> {
    if params.dwell_us < 0 || params.rest_gap_us <= params.dwell_us {
        return Err(SynthError::InvalidTiming {
            dwell_us: params.dwell_us,
            rest_gap_us: params.rest_gap_us,
        });
    }

    let default_schedule = vec![ScheduleEntry::new(noon(), 1)];
    let schedule: &[ScheduleEntry] = if params.schedule.is_empty() {
        &default_schedule
    } else {
        &params.schedule
    };

    // Resolve and validate every entry's node set up front.
    let mut entry_nodes: Vec<Vec<SensorId>> = Vec::with_capacity(schedule.len());
    for (index, entry) in schedule.iter().enumerate() {
        let nodes: BTreeSet<SensorId> = match &entry.within {
            Some(within) => {
                for sensor in within {
                    if !layout.sensors().contains(sensor) {
                        return Err(SynthError::UnknownSensor {
                            entry: index,
                            sensor: sensor.clone(),
                        });
                    }
                }
                within.clone()
            }
            None => layout.sensors().clone(),
        };
        if nodes.is_empty() {
            return Err(if entry.within.is_some() {
                SynthError::EmptySubgraph { entry: index }
            } else {
                SynthError::EmptyLayout
            });
        }
        if !layout.is_connected(Some(&nodes)) {
            return Err(SynthError::Disconnected { entry: index });
        }
        entry_nodes.push(nodes.into_iter().collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut events = Vec::new();
    for day in 0..params.days {
        let date = params.start_date + Duration::days(i64::from(day));
        for (entry, nodes) in schedule.iter().zip(&entry_nodes) {
            let mut cursor = date.and_time(entry.at);
            let steps = entry.steps.unwrap_or(params.steps);
            for _ in 0..entry.walks {
                let mut current = nodes[rng.random_range(0..nodes.len())].clone();
                for step in 0..steps {
                    events.push(SensorEvent::new(cursor, current.clone(), "ON"));
                    // Uniform choice among in-set neighbors plus staying put.
                    let moves: Vec<&SensorId> = nodes
                        .iter()
                        .filter(|n| layout.is_adjacent(&current, n))
                        .collect();
                    let pick = rng.random_range(0..=moves.len());
                    if pick < moves.len() {
                        current = moves[pick].clone();
                    }
                    if step + 1 < steps {
                        cursor += Duration::microseconds(params.dwell_us);
                    }
                }
                cursor += Duration::microseconds(params.rest_gap_us);
            }
        }
    }
    Ok(EventStream::new(events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{segment, SegmentParams};
    use crate::sensor_log::{parse_events, LoadOptions};
    use crate::topology::{build_confidence_graph, EdgeCounting};
    use std::io::Cursor;

    fn id(s: &str) -> SensorId {
        SensorId::new(s)
    }

    fn path_layout() -> GroundTruthLayout {
        GroundTruthLayout::new(
            ["A", "B", "C"].map(id),
            [(id("A"), id("B")), (id("B"), id("C"))],
        )
        .unwrap()
    }

    #[test]
    fn zero_steps_give_an_empty_stream() {
        let params = WalkParams {
            steps: 0,
            ..WalkParams::default()
        };
        let stream = generate_trace(&path_layout(), &params).unwrap();
        assert!(stream.is_empty());
    }

    #[test]
    fn single_node_walk_repeats_the_sensor() {
        let layout = GroundTruthLayout::new([id("A")], []).unwrap();
        let params = WalkParams {
            steps: 5,
            ..WalkParams::default()
        };
        let stream = generate_trace(&layout, &params).unwrap();
        assert_eq!(stream.len(), 5);
        for (i, event) in stream.events().iter().enumerate() {
            assert_eq!(event.sensor, id("A"));
            assert_eq!(
                event.timestamp,
                stream.events()[0].timestamp + Duration::microseconds(5_000_000 * i as i64)
            );
        }
    }

    #[test]
    fn transitions_follow_layout_edges() {
        let params = WalkParams {
            seed: 42,
            steps: 1000,
            ..WalkParams::default()
        };
        let stream = generate_trace(&path_layout(), &params).unwrap();
        assert_eq!(stream.len(), 1000);
        let allowed = [
            (id("A"), id("B")),
            (id("B"), id("A")),
            (id("B"), id("C")),
            (id("C"), id("B")),
        ];
        for pair in stream.events().windows(2) {
            if pair[0].sensor != pair[1].sensor {
                let step = (pair[0].sensor.clone(), pair[1].sensor.clone());
                assert!(allowed.contains(&step), "illegal transition {step:?}");
            }
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_traces() {
        let params = WalkParams {
            seed: 7,
            steps: 200,
            days: 3,
            ..WalkParams::default()
        };
        let first = generate_trace(&path_layout(), &params).unwrap();
        let second = generate_trace(&path_layout(), &params).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.to_log_text(), second.to_log_text());

        let other = generate_trace(&path_layout(), &WalkParams { seed: 8, ..params }).unwrap();
        assert_ne!(first, other);
    }

    #[test]
    fn walks_split_into_separate_activities() {
        let params = WalkParams {
            steps: 9, // 8 gaps of 5s = 40s span, exactly the x threshold
            schedule: vec![ScheduleEntry::new(noon(), 2)],
            ..WalkParams::default()
        };
        let stream = generate_trace(&path_layout(), &params).unwrap();
        assert_eq!(stream.len(), 18);
        let activities = segment(&stream, &SegmentParams::default());
        assert_eq!(activities.len(), 2);
        let gap = stream.events()[9].timestamp - stream.events()[8].timestamp;
        assert_eq!(gap, Duration::microseconds(60_000_000));
    }

    #[test]
    fn restricted_walks_stay_inside_the_subgraph() {
        let cluster: BTreeSet<SensorId> = [id("A"), id("B")].into_iter().collect();
        let params = WalkParams {
            steps: 300,
            schedule: vec![ScheduleEntry::new(noon(), 1).within(cluster.clone())],
            ..WalkParams::default()
        };
        let stream = generate_trace(&path_layout(), &params).unwrap();
        for event in stream.events() {
            assert!(cluster.contains(&event.sensor));
        }
    }

    #[test]
    fn generated_text_round_trips_through_the_parser() {
        let params = WalkParams {
            seed: 3,
            steps: 50,
            days: 2,
            ..WalkParams::default()
        };
        let stream = generate_trace(&path_layout(), &params).unwrap();
        let reparsed = parse_events(
            Cursor::new(stream.to_log_text().into_bytes()),
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(reparsed.stream, stream);
        assert_eq!(reparsed.skipped_lines, 0);
    }

    #[test]
    fn confidence_edges_of_a_trace_are_layout_edges() {
        let layout = path_layout();
        let params = WalkParams {
            seed: 11,
            steps: 40,
            days: 10,
            schedule: vec![ScheduleEntry::new(noon(), 3)],
            ..WalkParams::default()
        };
        let stream = generate_trace(&layout, &params).unwrap();
        let activities = segment(&stream, &SegmentParams::default());
        assert!(!activities.is_empty());
        let graph = build_confidence_graph(&activities, EdgeCounting::SetPerActivity);
        for (from, to) in graph.counts().keys() {
            assert!(layout.is_adjacent(from, to), "{from}->{to} not in layout");
        }
    }

    #[test]
    fn grid_layout_has_four_neighbor_adjacency() {
        let grid = grid_layout(2, 5);
        assert_eq!(grid.sensors().len(), 10);
        // 2*4 horizontal + 5 vertical edges.
        assert_eq!(grid.adjacent_pairs().len(), 13);
        assert!(grid.is_adjacent(&id("M001"), &id("M002")));
        assert!(grid.is_adjacent(&id("M001"), &id("M006")));
        assert!(!grid.is_adjacent(&id("M005"), &id("M006")));
        assert!(grid.is_connected(None));
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let layout = path_layout();

        let timing = WalkParams {
            dwell_us: 60_000_000,
            rest_gap_us: 5_000_000,
            ..WalkParams::default()
        };
        assert!(matches!(
            generate_trace(&layout, &timing),
            Err(SynthError::InvalidTiming { .. })
        ));

        let disconnected = WalkParams {
            schedule: vec![ScheduleEntry::new(noon(), 1).within([id("A"), id("C")])],
            ..WalkParams::default()
        };
        assert!(matches!(
            generate_trace(&layout, &disconnected),
            Err(SynthError::Disconnected { entry: 0 })
        ));

        let stranger = WalkParams {
            schedule: vec![ScheduleEntry::new(noon(), 1).within([id("Q")])],
            ..WalkParams::default()
        };
        assert!(matches!(
            generate_trace(&layout, &stranger),
            Err(SynthError::UnknownSensor { .. })
        ));

        let empty_restriction = WalkParams {
            schedule: vec![ScheduleEntry::new(noon(), 1).within([])],
            ..WalkParams::default()
        };
        assert!(matches!(
            generate_trace(&layout, &empty_restriction),
            Err(SynthError::EmptySubgraph { entry: 0 })
        ));

        let empty_layout = GroundTruthLayout::new([], []).unwrap();
        assert!(matches!(
            generate_trace(&empty_layout, &WalkParams::default()),
            Err(SynthError::EmptyLayout)
        ));
    }
}
