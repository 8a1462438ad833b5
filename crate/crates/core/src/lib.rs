//! Core pipeline for mining room-level sensor locations from raw
//! smart-home event logs: ingestion, activity segmentation, topology
//! deduction, frequent-itemset mining, room deduction, and a seeded
//! synthetic trace generator for end-to-end validation.

pub mod mining;
pub mod pipeline;
pub mod reference;
pub mod rooms;
pub mod segmentation;
pub mod sensor_log;
pub mod synth;
pub mod topology;

pub use mining::{frequent_itemsets, Itemset, MinSupport, MinedItemsets, MiningError, Transaction};
pub use pipeline::{
    emit_report, run_pipeline, ErrorKind, PipelineConfig, PipelineError, PipelineReport,
};
pub use rooms::{
    collect_window_transactions, deduce_bedrooms, deduce_kitchen, expand_with_topology,
    RoomAssignment, RoomLabel, TimeWindow, WindowError,
};
pub use segmentation::{segment, IndoorActivity, SegmentError, SegmentParams, MICROS_PER_SECOND};
pub use sensor_log::{
    load_dataset, load_dataset_with, parse_event_line, parse_events, EventStream, IngestFilter,
    LineError, LoadOptions, LoadOutcome, ParseMode, SensorAliases, SensorClass, SensorEvent,
    SensorId, SensorLogError, TriggerValues,
};
pub use synth::{generate_trace, grid_layout, ScheduleEntry, SynthError, WalkParams};
pub use topology::{
    build_confidence_graph, derive_topology, evaluate_against_layout, export_dot, extract_edges,
    ConfidenceGraph, ConfusionReport, DirectedPair, EdgeClass, EdgeCounting, GroundTruthLayout,
    Topology, TopologyError,
};
