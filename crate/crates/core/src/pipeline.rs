//! End-to-end orchestration: ingest → segment → confidence graph →
//! topology → room deduction → optional evaluation, collected into one
//! deterministic machine-readable report.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::mining::MinSupport;
use crate::rooms::{
    collect_window_transactions, deduce_bedrooms, deduce_kitchen, RoomAssignment, TimeWindow,
};
use crate::segmentation::{segment, SegmentError, SegmentParams};
use crate::sensor_log::{
    load_dataset_with, IngestFilter, LoadOptions, ParseMode, SensorAliases, SensorId,
    SensorLogError,
};
use crate::synth::SynthError;
use crate::topology::{
    build_confidence_graph, derive_topology, evaluate_against_layout, export_dot, EdgeCounting,
    GroundTruthLayout, TopologyError,
};

/// Everything one pipeline run needs. Paths under `*_out` are written
/// by [`run_pipeline`]; leaving them unset keeps the run side-effect
/// free apart from reading inputs.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub filter: IngestFilter,
    pub parse_mode: ParseMode,
    pub aliases: Option<PathBuf>,
    pub segment: SegmentParams,
    pub min_support: MinSupport,
    pub edge_counting: EdgeCounting,
    pub bedroom_window: TimeWindow,
    pub kitchen_window: TimeWindow,
    pub ground_truth: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub dot_out: Option<PathBuf>,
}

impl PipelineConfig {
    /// Case-study default parameters for the given dataset path.
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            dataset: dataset.into(),
            filter: IngestFilter::default(),
            parse_mode: ParseMode::Strict,
            aliases: None,
            segment: SegmentParams::default(),
            min_support: MinSupport::from_ratio(1, 2).expect("valid default"),
            edge_counting: EdgeCounting::SetPerActivity,
            bedroom_window: TimeWindow::bedroom_default(),
            kitchen_window: TimeWindow::kitchen_default(),
            ground_truth: None,
            report_out: None,
            dot_out: None,
        }
    }
}

/// Broad failure categories, used by callers to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Parse,
    Io,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] SensorLogError),
    #[error(transparent)]
    Segmentation(#[from] SegmentError),
    #[error(transparent)]
    GroundTruth(#[from] TopologyError),
    #[error(transparent)]
    Synthesis(#[from] SynthError),
    #[error("cannot write {path}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PipelineError::Dataset(SensorLogError::Io { .. }) => ErrorKind::Io,
            PipelineError::Dataset(SensorLogError::Parse { .. }) => ErrorKind::Parse,
            PipelineError::Dataset(SensorLogError::InvalidDateRange { .. }) => ErrorKind::Config,
            PipelineError::Segmentation(_) => ErrorKind::Config,
            PipelineError::GroundTruth(TopologyError::Io { .. }) => ErrorKind::Io,
            PipelineError::GroundTruth(TopologyError::Json { .. }) => ErrorKind::Parse,
            PipelineError::GroundTruth(_) => ErrorKind::Config,
            PipelineError::Synthesis(_) => ErrorKind::Config,
            PipelineError::Write { .. } => ErrorKind::Io,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSection {
    pub path: String,
    pub event_count: usize,
    pub day_count: usize,
    pub skipped_lines: usize,
    pub sensor_count: usize,
    pub sensors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsSection {
    pub min_duration_us: i64,
    pub max_gap_us: i64,
    pub min_support: MinSupport,
    pub edge_counting: EdgeCounting,
    pub bedroom_window: String,
    pub kitchen_window: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivitySection {
    pub count: usize,
    pub bedroom_window_transactions: usize,
    pub kitchen_window_transactions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceSection {
    pub beta: u64,
    pub gamma: usize,
    pub alpha: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologySection {
    pub solid: Vec<[String; 2]>,
    pub dashed: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoomSection {
    pub label: String,
    pub seed: Vec<String>,
    pub sensors: Vec<String>,
    pub added_by_expansion: Vec<String>,
    pub support_count: usize,
    pub transaction_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSection {
    pub sensor_count: usize,
    pub reachable_deduced: usize,
    pub reachable_missed: usize,
    pub unreachable_rejected: usize,
    pub unreachable_deduced: usize,
    pub false_deductions: usize,
    pub accuracy: f64,
}

/// The full run result. Serializes to JSON with a fixed field order and
/// sorted lists, so identical runs emit identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub dataset: DatasetSection,
    pub params: ParamsSection,
    pub activities: ActivitySection,
    pub confidence: ConfidenceSection,
    pub topology: TopologySection,
    pub rooms: Vec<RoomSection>,
    pub evaluation: Option<EvaluationSection>,
    #[serde(skip)]
    pub dot: String,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Sensor sets of the deduced rooms, in report order.
    pub fn room_sensor_sets(&self) -> Vec<(String, BTreeSet<String>)> {
        self.rooms
            .iter()
            .map(|room| (room.label.clone(), room.sensors.iter().cloned().collect()))
            .collect()
    }
}

fn names(sensors: impl IntoIterator<Item = SensorId>) -> Vec<String> {
    sensors.into_iter().map(|s| s.to_string()).collect()
}

fn room_section(room: &RoomAssignment) -> RoomSection {
    RoomSection {
        label: room.label.to_string(),
        seed: names(room.seed.iter().cloned()),
        sensors: names(room.sensors.iter().cloned()),
        added_by_expansion: names(room.added_by_expansion()),
        support_count: room.support_count,
        transaction_count: room.transaction_count,
    }
}

/// Executes the full chain and writes any configured output files.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let aliases = match &config.aliases {
        Some(path) => Some(SensorAliases::load(path)?),
        None => None,
    };
    let load_options = LoadOptions {
        filter: config.filter.clone(),
        mode: config.parse_mode,
        aliases,
    };
    let outcome = load_dataset_with(&config.dataset, &load_options)?;
    let stream = outcome.stream;

    let activities = segment(&stream, &config.segment);
    let graph = build_confidence_graph(&activities, config.edge_counting);
    let topology = derive_topology(&graph);

    let bedrooms = deduce_bedrooms(
        &activities,
        &topology,
        &config.bedroom_window,
        config.min_support,
    );
    let assigned: BTreeSet<SensorId> = bedrooms
        .iter()
        .flat_map(|room| room.sensors.iter().cloned())
        .collect();
    let kitchen = deduce_kitchen(
        &activities,
        &topology,
        &config.kitchen_window,
        config.min_support,
        &assigned,
    );

    let evaluation = match &config.ground_truth {
        Some(path) => {
            let truth = GroundTruthLayout::load(path)?;
            let confusion = evaluate_against_layout(&topology, &truth)?;
            Some(EvaluationSection {
                sensor_count: confusion.sensor_count,
                reachable_deduced: confusion.reachable_deduced,
                reachable_missed: confusion.reachable_missed,
                unreachable_rejected: confusion.unreachable_rejected,
                unreachable_deduced: confusion.unreachable_deduced,
                false_deductions: confusion.false_deductions(),
                accuracy: confusion.accuracy(),
            })
        }
        None => None,
    };

    let mut solid = Vec::new();
    let mut dashed = Vec::new();
    for ((a, b), class) in topology.edges() {
        let pair = [a.to_string(), b.to_string()];
        match class {
            crate::topology::EdgeClass::Solid => solid.push(pair),
            crate::topology::EdgeClass::Dashed => dashed.push(pair),
        }
    }

    let mut rooms: Vec<RoomSection> = bedrooms.iter().map(room_section).collect();
    if let Some(kitchen) = &kitchen {
        rooms.push(room_section(kitchen));
    }

    let report = PipelineReport {
        dataset: DatasetSection {
            path: config.dataset.display().to_string(),
            event_count: stream.len(),
            day_count: stream.day_count(),
            skipped_lines: outcome.skipped_lines,
            sensor_count: stream.sensor_universe().len(),
            sensors: names(stream.sensor_universe()),
        },
        params: ParamsSection {
            min_duration_us: config.segment.min_duration_us(),
            max_gap_us: config.segment.max_gap_us(),
            min_support: config.min_support,
            edge_counting: config.edge_counting,
            bedroom_window: config.bedroom_window.to_string(),
            kitchen_window: config.kitchen_window.to_string(),
        },
        activities: ActivitySection {
            count: activities.len(),
            bedroom_window_transactions: collect_window_transactions(
                &activities,
                &config.bedroom_window,
            )
            .len(),
            kitchen_window_transactions: collect_window_transactions(
                &activities,
                &config.kitchen_window,
            )
            .len(),
        },
        confidence: ConfidenceSection {
            beta: graph.beta(),
            gamma: graph.gamma(),
            alpha: graph.alpha(),
        },
        topology: TopologySection { solid, dashed },
        rooms,
        evaluation,
        dot: export_dot(&topology, &graph),
    };

    if let Some(path) = &config.report_out {
        emit_report(&report, path)?;
    }
    if let Some(path) = &config.dot_out {
        write_text(path, &report.dot)?;
    }
    Ok(report)
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the report JSON; identical reports produce identical bytes.
pub fn emit_report(report: &PipelineReport, path: &Path) -> Result<(), PipelineError> {
    write_text(path, &report.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_trace, ScheduleEntry, WalkParams};
    use crate::topology::GroundTruthLayout;
    use chrono::NaiveTime;

    fn id(s: &str) -> SensorId {
        SensorId::new(s)
    }

    /// 2x2 grid: N1-N2, N3-N4 horizontal; N1-N3, N2-N4 vertical.
    fn grid_layout() -> GroundTruthLayout {
        GroundTruthLayout::new(
            ["N1", "N2", "N3", "N4"].map(id),
            [
                (id("N1"), id("N2")),
                (id("N3"), id("N4")),
                (id("N1"), id("N3")),
                (id("N2"), id("N4")),
            ],
        )
        .unwrap()
    }

    fn synthetic_dataset(dir: &Path) -> (PathBuf, PathBuf) {
        let layout = grid_layout();
        let night: BTreeSet<SensorId> = [id("N1"), id("N2")].into_iter().collect();
        let dinner: BTreeSet<SensorId> = [id("N3"), id("N4")].into_iter().collect();
        let params = WalkParams {
            seed: 99,
            steps: 14,
            days: 30,
            schedule: vec![
                ScheduleEntry::new(NaiveTime::from_hms_opt(3, 0, 0).unwrap(), 2)
                    .within(night.clone()),
                ScheduleEntry::new(NaiveTime::from_hms_opt(10, 0, 0).unwrap(), 3),
                ScheduleEntry::new(NaiveTime::from_hms_opt(18, 15, 0).unwrap(), 2)
                    .within(dinner.clone()),
            ],
            ..WalkParams::default()
        };
        let stream = generate_trace(&layout, &params).unwrap();
        let dataset = dir.join("trace.log");
        std::fs::write(&dataset, stream.to_log_text()).unwrap();
        let truth = dir.join("layout.json");
        std::fs::write(&truth, layout.to_json()).unwrap();
        (dataset, truth)
    }

    #[test]
    fn empty_dataset_yields_an_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = dir.path().join("empty.log");
        std::fs::write(&dataset, "").unwrap();
        let report = run_pipeline(&PipelineConfig::new(&dataset)).unwrap();
        assert_eq!(report.dataset.event_count, 0);
        assert_eq!(report.activities.count, 0);
        assert_eq!(report.confidence.alpha, None);
        assert!(report.topology.solid.is_empty());
        assert!(report.rooms.is_empty());
        assert_eq!(report.evaluation, None);
        assert_eq!(report.dot, "graph topology {\n}\n");
    }

    #[test]
    fn synthetic_run_recovers_clusters_and_stays_sound() {
        let dir = tempfile::tempdir().unwrap();
        let (dataset, truth) = synthetic_dataset(dir.path());
        let mut config = PipelineConfig::new(&dataset);
        config.ground_truth = Some(truth);
        let report = run_pipeline(&config).unwrap();

        assert_eq!(report.dataset.sensor_count, 4);
        assert!(report.activities.count > 0);

        // The walker never leaves layout edges, so nothing spurious can
        // be deduced.
        let evaluation = report.evaluation.as_ref().unwrap();
        assert_eq!(evaluation.unreachable_deduced, 0);
        assert_eq!(evaluation.sensor_count, 4);

        let rooms = report.room_sensor_sets();
        assert!(!rooms.is_empty());
        assert_eq!(rooms[0].0, "bedroom-1");
        assert_eq!(
            rooms[0].1,
            ["N1", "N2"].iter().map(|s| s.to_string()).collect()
        );
        let kitchen = rooms.iter().find(|(label, _)| label == "kitchen-dining");
        assert_eq!(
            kitchen.unwrap().1,
            ["N3", "N4"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let (dataset, truth) = synthetic_dataset(dir.path());
        let mut config = PipelineConfig::new(&dataset);
        config.ground_truth = Some(truth);
        config.report_out = Some(dir.path().join("report.json"));
        config.dot_out = Some(dir.path().join("topology.dot"));

        let first = run_pipeline(&config).unwrap();
        let first_bytes = std::fs::read(dir.path().join("report.json")).unwrap();
        let first_dot = std::fs::read(dir.path().join("topology.dot")).unwrap();
        let second = run_pipeline(&config).unwrap();
        let second_bytes = std::fs::read(dir.path().join("report.json")).unwrap();
        let second_dot = std::fs::read(dir.path().join("topology.dot")).unwrap();

        assert_eq!(first, second);
        assert_eq!(first_bytes, second_bytes);
        assert_eq!(first_dot, second_dot);
        assert_eq!(first_bytes, first.to_json().into_bytes());
    }

    #[test]
    fn report_without_evaluation_serializes_null() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = dir.path().join("empty.log");
        std::fs::write(&dataset, "").unwrap();
        let report = run_pipeline(&PipelineConfig::new(&dataset)).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json.get("evaluation").unwrap().is_null());
        assert!(json
            .get("confidence")
            .unwrap()
            .get("alpha")
            .unwrap()
            .is_null());
    }

    #[test]
    fn missing_dataset_is_an_io_error() {
        let err = run_pipeline(&PipelineConfig::new("/nonexistent/trace.log")).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Io);
    }

    #[test]
    fn malformed_line_is_a_parse_error_unless_lenient() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = dir.path().join("bad.log");
        std::fs::write(&dataset, "2009-10-16 03:00:00 N1 ON\nnot a record\n").unwrap();

        let strict = PipelineConfig::new(&dataset);
        let err = run_pipeline(&strict).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Parse);

        let mut lenient = PipelineConfig::new(&dataset);
        lenient.parse_mode = ParseMode::Lenient;
        let report = run_pipeline(&lenient).unwrap();
        assert_eq!(report.dataset.skipped_lines, 1);
        assert_eq!(report.dataset.event_count, 1);
    }

    #[test]
    fn unknown_topology_sensor_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let (dataset, _) = synthetic_dataset(dir.path());
        // Ground truth missing every sensor the topology will contain.
        let truth = dir.path().join("other.json");
        let other = GroundTruthLayout::new([id("Q1"), id("Q2")], [(id("Q1"), id("Q2"))]).unwrap();
        std::fs::write(&truth, other.to_json()).unwrap();
        let mut config = PipelineConfig::new(&dataset);
        config.ground_truth = Some(truth);
        let err = run_pipeline(&config).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Config);
    }

    #[test]
    fn multiset_counting_changes_only_confidence_totals() {
        let dir = tempfile::tempdir().unwrap();
        let (dataset, _) = synthetic_dataset(dir.path());
        let set_run = run_pipeline(&PipelineConfig::new(&dataset)).unwrap();
        let mut config = PipelineConfig::new(&dataset);
        config.edge_counting = EdgeCounting::MultisetTransitions;
        let multi_run = run_pipeline(&config).unwrap();
        assert!(multi_run.confidence.beta > set_run.confidence.beta);
        assert_eq!(multi_run.confidence.gamma, set_run.confidence.gamma);
    }
}
