//! Raw sensor-event log ingestion: parsing, filtering, and the ordered
//! event stream every later stage consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stable identifier of one physical sensor, e.g. `M021`, `D003`, `T001`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorId(String);

impl SensorId {
    pub fn new(id: impl Into<String>) -> Self {
        SensorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Sensor class derived from the leading letter of the id.
    pub fn class(&self) -> SensorClass {
        match self.0.chars().next() {
            Some('M') => SensorClass::Motion,
            Some('D') => SensorClass::Door,
            Some('T') => SensorClass::Temperature,
            _ => SensorClass::Other,
        }
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SensorId {
    fn from(s: &str) -> Self {
        SensorId::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorClass {
    Motion,
    Door,
    Temperature,
    Other,
}

/// One timestamped trigger of one identified sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorEvent {
    pub timestamp: NaiveDateTime,
    pub sensor: SensorId,
    pub value: String,
}

impl SensorEvent {
    pub fn new(timestamp: NaiveDateTime, sensor: SensorId, value: impl Into<String>) -> Self {
        SensorEvent {
            timestamp,
            sensor,
            value: value.into(),
        }
    }
}

impl fmt::Display for SensorEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.timestamp.format("%Y-%m-%d %H:%M:%S%.6f"),
            self.sensor,
            self.value
        )
    }
}

/// Time-ordered event sequence plus the number of distinct calendar days
/// it covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    events: Vec<SensorEvent>,
    day_count: usize,
}

impl EventStream {
    /// Builds a stream from events in any order. Sorting is stable, so
    /// events with equal timestamps keep their input order.
    pub fn new(mut events: Vec<SensorEvent>) -> Self {
        events.sort_by_key(|e| e.timestamp);
        let day_count = events
            .iter()
            .map(|e| e.timestamp.date())
            .collect::<BTreeSet<_>>()
            .len();
        EventStream { events, day_count }
    }

    pub fn empty() -> Self {
        EventStream {
            events: Vec::new(),
            day_count: 0,
        }
    }

    pub fn events(&self) -> &[SensorEvent] {
        &self.events
    }

    pub fn day_count(&self) -> usize {
        self.day_count
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Distinct sensor ids appearing in the stream.
    pub fn sensor_universe(&self) -> BTreeSet<SensorId> {
        self.events.iter().map(|e| e.sensor.clone()).collect()
    }

    /// Renders the stream in the same text format [`load_dataset`] parses,
    /// one event per line.
    pub fn to_log_text(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&event.to_string());
            out.push('\n');
        }
        out
    }
}

/// Which raw message values count as a sensor being triggered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriggerValues {
    /// Keep every value token.
    All,
    /// Keep only the listed activation tokens.
    Only(BTreeSet<String>),
}

impl TriggerValues {
    fn admits(&self, value: &str) -> bool {
        match self {
            TriggerValues::All => true,
            TriggerValues::Only(set) => set.contains(value),
        }
    }
}

impl Default for TriggerValues {
    fn default() -> Self {
        TriggerValues::Only(["ON", "OPEN"].into_iter().map(String::from).collect())
    }
}

/// Ingest-time event selection: sensor classes to drop, values that count
/// as activations, and an optional inclusive date range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestFilter {
    pub excluded_classes: BTreeSet<SensorClass>,
    pub trigger_values: TriggerValues,
    pub date_range: Option<(NaiveDate, NaiveDate)>,
}

impl Default for IngestFilter {
    fn default() -> Self {
        IngestFilter {
            excluded_classes: [SensorClass::Temperature].into_iter().collect(),
            trigger_values: TriggerValues::default(),
            date_range: None,
        }
    }
}

impl IngestFilter {
    fn validate(&self) -> Result<(), SensorLogError> {
        if let Some((start, end)) = self.date_range {
            if start > end {
                return Err(SensorLogError::InvalidDateRange { start, end });
            }
        }
        Ok(())
    }

    fn admits(&self, event: &SensorEvent) -> bool {
        if self.excluded_classes.contains(&event.sensor.class()) {
            return false;
        }
        if !self.trigger_values.admits(&event.value) {
            return false;
        }
        if let Some((start, end)) = self.date_range {
            let date = event.timestamp.date();
            if date < start || date > end {
                return false;
            }
        }
        true
    }
}

/// Optional substitution table mapping raw fingerprint tokens to sensor ids,
/// for logs where ids have not been substituted yet.
#[derive(Debug, Clone, Default)]
pub struct SensorAliases(BTreeMap<String, String>);

impl SensorAliases {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        SensorAliases(pairs.into_iter().collect())
    }

    /// Reads a two-column whitespace-separated file: `fingerprint sensor-id`.
    pub fn load(path: &Path) -> Result<Self, SensorLogError> {
        let text = std::fs::read_to_string(path).map_err(|source| SensorLogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut map = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let mut tokens = line.split_whitespace();
            match (tokens.next(), tokens.next()) {
                (None, _) => continue,
                (Some(fingerprint), Some(id)) => {
                    map.insert(fingerprint.to_string(), id.to_string());
                }
                (Some(_), None) => {
                    return Err(SensorLogError::Parse {
                        line: idx + 1,
                        text: line.to_string(),
                        reason: LineError::FieldCount(1),
                    });
                }
            }
        }
        Ok(SensorAliases(map))
    }

    fn resolve<'a>(&'a self, token: &'a str) -> &'a str {
        self.0.get(token).map(String::as_str).unwrap_or(token)
    }
}

/// Why a single log line failed to parse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("expected at least 4 whitespace-separated fields, found {0}")]
    FieldCount(usize),
    #[error("malformed timestamp {0:?}")]
    Timestamp(String),
}

#[derive(Debug, Error)]
pub enum SensorLogError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason} in {text:?}")]
    Parse {
        line: usize,
        text: String,
        reason: LineError,
    },
    #[error("date range start {start} is after end {end}")]
    InvalidDateRange { start: NaiveDate, end: NaiveDate },
}

/// Parses one log record: whitespace-separated date, time, sensor id and
/// value, with any trailing annotation tokens dropped. Blank lines yield
/// `Ok(None)`.
pub fn parse_event_line(line: &str) -> Result<Option<SensorEvent>, LineError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.is_empty() {
        return Ok(None);
    }
    if tokens.len() < 4 {
        return Err(LineError::FieldCount(tokens.len()));
    }
    let stamp = format!("{} {}", tokens[0], tokens[1]);
    let timestamp = parse_timestamp(&stamp).ok_or_else(|| LineError::Timestamp(stamp.clone()))?;
    Ok(Some(SensorEvent::new(
        timestamp,
        SensorId::new(tokens[2]),
        tokens[3],
    )))
}

/// Accepts `YYYY-MM-DD HH:MM:SS` with an optional fractional-seconds part;
/// a missing fraction means `.000000`.
fn parse_timestamp(stamp: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(stamp, "%Y-%m-%d %H:%M:%S%.f").ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and count them.
    Lenient,
}

/// Options for [`load_dataset_with`]; [`IngestFilter`] covers the common case.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub filter: IngestFilter,
    pub mode: ParseMode,
    pub aliases: Option<SensorAliases>,
}

#[derive(Debug)]
pub struct LoadOutcome {
    pub stream: EventStream,
    /// Malformed lines skipped in lenient mode; always 0 in strict mode.
    pub skipped_lines: usize,
}

/// Loads, filters, and time-orders a plain-text event log.
pub fn load_dataset(path: &Path, filter: &IngestFilter) -> Result<EventStream, SensorLogError> {
    let options = LoadOptions {
        filter: filter.clone(),
        ..LoadOptions::default()
    };
    load_dataset_with(path, &options).map(|outcome| outcome.stream)
}

pub fn load_dataset_with(
    path: &Path,
    options: &LoadOptions,
) -> Result<LoadOutcome, SensorLogError> {
    let file = File::open(path).map_err(|source| SensorLogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_events(BufReader::new(file), options)
}

/// Reader-level worker behind [`load_dataset`], usable on any buffered input.
pub fn parse_events<R: BufRead>(
    reader: R,
    options: &LoadOptions,
) -> Result<LoadOutcome, SensorLogError> {
    options.filter.validate()?;
    let mut events = Vec::new();
    let mut skipped_lines = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| SensorLogError::Io {
            path: format!("<line {}>", idx + 1),
            source,
        })?;
        let parsed = match parse_event_line(&line) {
            Ok(parsed) => parsed,
            Err(reason) => match options.mode {
                ParseMode::Strict => {
                    return Err(SensorLogError::Parse {
                        line: idx + 1,
                        text: line,
                        reason,
                    });
                }
                ParseMode::Lenient => {
                    skipped_lines += 1;
                    continue;
                }
            },
        };
        let Some(mut event) = parsed else { continue };
        if let Some(aliases) = &options.aliases {
            let resolved = aliases.resolve(event.sensor.as_str());
            if resolved != event.sensor.as_str() {
                event.sensor = SensorId::new(resolved);
            }
        }
        if options.filter.admits(&event) {
            events.push(event);
        }
    }
    Ok(LoadOutcome {
        stream: EventStream::new(events),
        skipped_lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    fn load_text(text: &str, options: &LoadOptions) -> LoadOutcome {
        parse_events(Cursor::new(text.as_bytes()), options).unwrap()
    }

    #[test]
    fn parses_plain_record() {
        let event = parse_event_line("2009-10-16 06:18:19.000019 M021 ON")
            .unwrap()
            .unwrap();
        assert_eq!(event.timestamp, ts("2009-10-16 06:18:19.000019"));
        assert_eq!(event.sensor, SensorId::new("M021"));
        assert_eq!(event.value, "ON");
    }

    #[test]
    fn fraction_is_optional() {
        let event = parse_event_line("2009-10-16 06:18:19 M021 ON")
            .unwrap()
            .unwrap();
        assert_eq!(event.timestamp, ts("2009-10-16 06:18:19.000000"));
    }

    #[test]
    fn annotations_are_dropped() {
        let event = parse_event_line("2009-10-16 06:18:19.000019\tM021\tON\tSleep begin")
            .unwrap()
            .unwrap();
        assert_eq!(event.value, "ON");
    }

    #[test]
    fn blank_line_is_skip_marker() {
        assert_eq!(parse_event_line("").unwrap(), None);
        assert_eq!(parse_event_line("   \t ").unwrap(), None);
    }

    #[test]
    fn missing_value_field_is_an_error() {
        assert_eq!(
            parse_event_line("2009-10-16 06:18 M021"),
            Err(LineError::FieldCount(3))
        );
    }

    #[test]
    fn malformed_timestamp_is_an_error() {
        let err = parse_event_line("2009-13-40 06:18:19 M021 ON").unwrap_err();
        assert!(matches!(err, LineError::Timestamp(_)));
    }

    #[test]
    fn sensor_classes_follow_leading_letter() {
        assert_eq!(SensorId::new("M021").class(), SensorClass::Motion);
        assert_eq!(SensorId::new("D003").class(), SensorClass::Door);
        assert_eq!(SensorId::new("T001").class(), SensorClass::Temperature);
        assert_eq!(SensorId::new("S027").class(), SensorClass::Other);
    }

    #[test]
    fn default_filter_drops_temperature_and_non_activations() {
        let text = "2009-10-16 06:00:00 M001 ON\n\
                    2009-10-16 06:00:01 M001 OFF\n\
                    2009-10-16 06:00:02 T001 21.5\n\
                    2009-10-16 06:00:03 D001 OPEN\n\
                    2009-10-16 06:00:04 D001 CLOSE\n";
        let outcome = load_text(text, &LoadOptions::default());
        let ids: Vec<&str> = outcome
            .stream
            .events()
            .iter()
            .map(|e| e.sensor.as_str())
            .collect();
        assert_eq!(ids, ["M001", "D001"]);
        for event in outcome.stream.events() {
            assert!(!matches!(event.sensor.class(), SensorClass::Temperature));
        }
    }

    #[test]
    fn date_range_is_inclusive() {
        let text = "2009-10-15 23:59:59 M001 ON\n\
                    2009-10-16 00:00:00 M002 ON\n\
                    2009-10-21 23:59:59 M003 ON\n\
                    2009-10-22 00:00:00 M004 ON\n";
        let mut options = LoadOptions::default();
        options.filter.date_range = Some((
            NaiveDate::from_ymd_opt(2009, 10, 16).unwrap(),
            NaiveDate::from_ymd_opt(2009, 10, 21).unwrap(),
        ));
        let outcome = load_text(text, &options);
        let ids: Vec<&str> = outcome
            .stream
            .events()
            .iter()
            .map(|e| e.sensor.as_str())
            .collect();
        assert_eq!(ids, ["M002", "M003"]);
    }

    #[test]
    fn inverted_date_range_is_rejected() {
        let mut options = LoadOptions::default();
        options.filter.date_range = Some((
            NaiveDate::from_ymd_opt(2009, 10, 21).unwrap(),
            NaiveDate::from_ymd_opt(2009, 10, 16).unwrap(),
        ));
        let err = parse_events(Cursor::new(b"" as &[u8]), &options).unwrap_err();
        assert!(matches!(err, SensorLogError::InvalidDateRange { .. }));
    }

    #[test]
    fn empty_input_yields_empty_stream() {
        let outcome = load_text("", &LoadOptions::default());
        assert!(outcome.stream.is_empty());
        assert_eq!(outcome.stream.day_count(), 0);
    }

    #[test]
    fn equal_timestamps_preserve_input_order() {
        let text = "2009-10-16 06:00:00.5 M002 ON\n\
                    2009-10-16 06:00:00.5 M001 ON\n\
                    2009-10-16 06:00:00.5 M003 ON\n";
        let outcome = load_text(text, &LoadOptions::default());
        let ids: Vec<&str> = outcome
            .stream
            .events()
            .iter()
            .map(|e| e.sensor.as_str())
            .collect();
        assert_eq!(ids, ["M002", "M001", "M003"]);
    }

    #[test]
    fn out_of_order_lines_are_sorted() {
        let text = "2009-10-17 06:00:00 M002 ON\n\
                    2009-10-16 06:00:00 M001 ON\n";
        let outcome = load_text(text, &LoadOptions::default());
        assert_eq!(outcome.stream.events()[0].sensor.as_str(), "M001");
        assert_eq!(outcome.stream.day_count(), 2);
    }

    #[test]
    fn strict_mode_reports_line_number() {
        let text = "2009-10-16 06:00:00 M001 ON\nnot a record\n";
        let err = parse_events(Cursor::new(text.as_bytes()), &LoadOptions::default()).unwrap_err();
        match err {
            SensorLogError::Parse { line, text, .. } => {
                assert_eq!(line, 2);
                assert_eq!(text, "not a record");
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_skips_and_counts() {
        let text = "garbage\n2009-10-16 06:00:00 M001 ON\n2009-99-99 bad M1 ON\n";
        let options = LoadOptions {
            mode: ParseMode::Lenient,
            ..LoadOptions::default()
        };
        let outcome = load_text(text, &options);
        assert_eq!(outcome.skipped_lines, 2);
        assert_eq!(outcome.stream.len(), 1);
    }

    #[test]
    fn aliases_substitute_fingerprints() {
        let aliases = SensorAliases::from_pairs([("f01".to_string(), "M001".to_string())]);
        let options = LoadOptions {
            aliases: Some(aliases),
            ..LoadOptions::default()
        };
        let outcome = load_text("2009-10-16 06:00:00 f01 ON\n", &options);
        assert_eq!(outcome.stream.events()[0].sensor.as_str(), "M001");
    }

    #[test]
    fn log_text_round_trips() {
        let text = "2009-10-16 06:18:19.000019 M021 ON\n\
                    2009-10-16 06:18:20 D003 OPEN\n\
                    2009-10-17 01:02:03.5 M001 ON\n";
        let first = load_text(text, &LoadOptions::default()).stream;
        let second = load_text(&first.to_log_text(), &LoadOptions::default()).stream;
        assert_eq!(first, second);
    }
}
