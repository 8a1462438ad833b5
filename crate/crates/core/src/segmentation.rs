//! Splits an event stream into indoor activities: maximal runs of events
//! whose adjacent gaps stay within a bound and whose total span is long
//! enough to represent deliberate movement rather than noise.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

use crate::sensor_log::{EventStream, SensorEvent, SensorId};

pub const MICROS_PER_SECOND: i64 = 1_000_000;

/// Segmentation thresholds. `min_duration` is the smallest span (last
/// event minus first) a run may have and still count as an activity;
/// `max_gap` is the largest silence allowed between consecutive events
/// of one activity. Both comparisons are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentParams {
    min_duration_us: i64,
    max_gap_us: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("segmentation thresholds must satisfy x > y > 0, got x={min_duration_us}us y={max_gap_us}us")]
    InvalidThresholds {
        min_duration_us: i64,
        max_gap_us: i64,
    },
}

impl SegmentParams {
    pub fn from_seconds(min_duration: u32, max_gap: u32) -> Result<Self, SegmentError> {
        SegmentParams::from_micros(
            i64::from(min_duration) * MICROS_PER_SECOND,
            i64::from(max_gap) * MICROS_PER_SECOND,
        )
    }

    pub fn from_micros(min_duration_us: i64, max_gap_us: i64) -> Result<Self, SegmentError> {
        if min_duration_us <= max_gap_us || max_gap_us <= 0 {
            return Err(SegmentError::InvalidThresholds {
                min_duration_us,
                max_gap_us,
            });
        }
        Ok(SegmentParams {
            min_duration_us,
            max_gap_us,
        })
    }

    pub fn min_duration_us(&self) -> i64 {
        self.min_duration_us
    }

    pub fn max_gap_us(&self) -> i64 {
        self.max_gap_us
    }
}

/// x = 40s, y = 10s.
impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams::from_seconds(40, 10).expect("default thresholds are valid")
    }
}

/// One segmented activity: a non-empty, time-ordered slice of the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndoorActivity {
    events: Vec<SensorEvent>,
}

impl IndoorActivity {
    pub(crate) fn from_run(events: Vec<SensorEvent>) -> Self {
        debug_assert!(!events.is_empty());
        IndoorActivity { events }
    }

    pub fn events(&self) -> &[SensorEvent] {
        &self.events
    }

    pub fn start(&self) -> NaiveDateTime {
        self.events[0].timestamp
    }

    pub fn end(&self) -> NaiveDateTime {
        self.events[self.events.len() - 1].timestamp
    }

    pub fn duration_us(&self) -> i64 {
        span_us(&self.events)
    }

    /// Distinct sensors triggered during the activity, in id order.
    pub fn sensor_set(&self) -> BTreeSet<SensorId> {
        self.events.iter().map(|e| e.sensor.clone()).collect()
    }
}

fn gap_us(a: &SensorEvent, b: &SensorEvent) -> i64 {
    (b.timestamp - a.timestamp)
        .num_microseconds()
        .expect("event gap fits in i64 microseconds")
}

fn span_us(run: &[SensorEvent]) -> i64 {
    gap_us(&run[0], &run[run.len() - 1])
}

/// Splits the stream at every gap exceeding `max_gap` and keeps the
/// resulting runs whose span is at least `min_duration`.
pub fn segment(stream: &EventStream, params: &SegmentParams) -> Vec<IndoorActivity> {
    let events = stream.events();
    let mut activities = Vec::new();
    let mut run_start = 0usize;
    for i in 1..=events.len() {
        let at_break = i == events.len() || gap_us(&events[i - 1], &events[i]) > params.max_gap_us;
        if !at_break {
            continue;
        }
        let run = &events[run_start..i];
        if !run.is_empty() && span_us(run) >= params.min_duration_us {
            activities.push(IndoorActivity {
                events: run.to_vec(),
            });
        }
        run_start = i;
    }
    activities
}
