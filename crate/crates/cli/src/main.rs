//! `sensemap` — deduce sensor topology and room locations from
//! smart-home event logs, generate synthetic walker traces, and mine
//! transaction files directly.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{NaiveDate, NaiveTime};
use clap::{ArgGroup, Args, Parser, Subcommand};

use sensemap_core::pipeline::{run_pipeline, ErrorKind, PipelineConfig, PipelineError};
use sensemap_core::rooms::TimeWindow;
use sensemap_core::sensor_log::{ParseMode, SensorId, TriggerValues};
use sensemap_core::synth::{generate_trace, grid_layout, ScheduleEntry, WalkParams};
use sensemap_core::topology::GroundTruthLayout;
use sensemap_core::{frequent_itemsets, EdgeCounting, MinSupport, SegmentParams, Transaction};

#[derive(Parser)]
#[command(
    name = "sensemap",
    version,
    about = "Mine sensor topology and room locations from smart-home event logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on an event-log dataset.
    Run(Box<RunArgs>),
    /// Generate a synthetic walker trace over a known layout.
    Synth(SynthArgs),
    /// Mine frequent itemsets from a plain transactions file.
    Mine(MineArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Plain-text event log (whitespace-separated date, time, sensor, value).
    #[arg(long)]
    dataset: PathBuf,
    /// First calendar day to keep (YYYY-MM-DD); requires --to-date.
    #[arg(long)]
    from_date: Option<NaiveDate>,
    /// Last calendar day to keep, inclusive; requires --from-date.
    #[arg(long)]
    to_date: Option<NaiveDate>,
    /// Minimum activity duration x in seconds.
    #[arg(long, default_value_t = 40)]
    x_seconds: u32,
    /// Maximum intra-activity gap y in seconds.
    #[arg(long, default_value_t = 10)]
    y_seconds: u32,
    /// Minimum itemset support, decimal or fraction (e.g. 0.5 or 1/2).
    #[arg(long, default_value = "0.5")]
    min_support: MinSupport,
    /// Bedroom mining window, HH:MM-HH:MM.
    #[arg(long, default_value = "02:00-06:00")]
    bedroom_window: TimeWindow,
    /// Kitchen/dining mining window, HH:MM-HH:MM.
    #[arg(long, default_value = "18:00-19:00")]
    kitchen_window: TimeWindow,
    /// Layout JSON ({"sensors": [...], "adjacent": [["A","B"], ...]})
    /// to score the deduced topology against.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    report_out: Option<PathBuf>,
    /// Write the topology DOT rendering here.
    #[arg(long)]
    dot_out: Option<PathBuf>,
    /// Two-column fingerprint→sensor-id alias file applied at ingest.
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Keep every event value instead of only ON/OPEN activations.
    #[arg(long)]
    include_all_values: bool,
    /// Skip malformed log lines instead of aborting.
    #[arg(long)]
    lenient_parse: bool,
    /// Count every transition instead of deduplicating per activity.
    #[arg(long)]
    multiset_edges: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["layout", "grid"])))]
struct SynthArgs {
    /// Layout JSON file to walk.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Generate a ROWSxCOLS grid layout instead (e.g. 2x5).
    #[arg(long)]
    grid: Option<String>,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Walk length in steps for entries that do not override it.
    #[arg(long, default_value_t = 10)]
    steps: u32,
    /// Seconds between triggers within a walk.
    #[arg(long, default_value_t = 5)]
    dwell_seconds: u32,
    /// Seconds between walks.
    #[arg(long, default_value_t = 60)]
    rest_gap_seconds: u32,
    /// First simulated calendar day.
    #[arg(long, default_value = "2009-10-16")]
    start_date: NaiveDate,
    /// Number of simulated days.
    #[arg(long, default_value_t = 1)]
    days: u32,
    /// Daily schedule entry `at=HH:MM;walks=N[;steps=N][;within=ID,ID,...]`,
    /// repeatable; omitted → one unrestricted noon walk.
    #[arg(long = "schedule")]
    schedule: Vec<String>,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the walked layout as JSON (useful with --grid).
    #[arg(long)]
    layout_out: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    /// Transactions file: one transaction per line, sensor ids
    /// whitespace-separated; blank lines skipped.
    #[arg(long)]
    transactions: PathBuf,
    /// Minimum itemset support, decimal or fraction.
    #[arg(long, default_value = "0.5")]
    min_support: MinSupport,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::Synth(args) => cmd_synth(args),
        Command::Mine(args) => cmd_mine(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 = configuration, 3 = dataset parse, 4 = I/O (clap usage errors
/// also exit 2).
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(pipeline) = err.downcast_ref::<PipelineError>() {
        return match pipeline.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Parse => 3,
            ErrorKind::Io => 4,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 4;
    }
    2
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = PipelineConfig::new(&args.dataset);
    config.segment = SegmentParams::from_seconds(args.x_seconds, args.y_seconds)
        .map_err(PipelineError::Segmentation)?;
    config.min_support = args.min_support;
    config.bedroom_window = args.bedroom_window;
    config.kitchen_window = args.kitchen_window;
    config.ground_truth = args.ground_truth;
    config.report_out = args.report_out.clone();
    config.dot_out = args.dot_out.clone();
    config.aliases = args.aliases;
    config.parse_mode = if args.lenient_parse {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    if args.include_all_values {
        config.filter.trigger_values = TriggerValues::All;
    }
    if args.multiset_edges {
        config.edge_counting = EdgeCounting::MultisetTransitions;
    }
    config.filter.date_range = match (args.from_date, args.to_date) {
        (Some(from), Some(to)) => Some((from, to)),
        (None, None) => None,
        _ => bail!("--from-date and --to-date must be given together"),
    };

    let report = run_pipeline(&config)?;

    println!(
        "events: {} ({} days, {} sensors{})",
        report.dataset.event_count,
        report.dataset.day_count,
        report.dataset.sensor_count,
        if report.dataset.skipped_lines > 0 {
            format!(", {} lines skipped", report.dataset.skipped_lines)
        } else {
            String::new()
        }
    );
    println!(
        "activities: {} ({} bedroom-window, {} kitchen-window transactions)",
        report.activities.count,
        report.activities.bedroom_window_transactions,
        report.activities.kitchen_window_transactions
    );
    match report.confidence.alpha {
        Some(alpha) => println!(
            "confidence: beta={} gamma={} alpha={}",
            report.confidence.beta, report.confidence.gamma, alpha
        ),
        None => println!("confidence: empty graph"),
    }
    println!(
        "topology: {} solid, {} dashed edges",
        report.topology.solid.len(),
        report.topology.dashed.len()
    );
    for room in &report.rooms {
        println!(
            "{}: {} (seed {}, support {}/{})",
            room.label,
            room.sensors.join(" "),
            room.seed.join(" "),
            room.support_count,
            room.transaction_count
        );
    }
    if report.rooms.is_empty() {
        println!("rooms: none deduced");
    }
    match &report.evaluation {
        Some(eval) => println!(
            "evaluation: 1/1={} 1/0={} 0/0={} 0/1={} accuracy={:.4}",
            eval.reachable_deduced,
            eval.reachable_missed,
            eval.unreachable_rejected,
            eval.unreachable_deduced,
            eval.accuracy
        ),
        None => println!("evaluation: skipped (no ground truth given)"),
    }
    if let Some(path) = &args.report_out {
        println!("report written to {}", path.display());
    }
    if let Some(path) = &args.dot_out {
        println!("dot written to {}", path.display());
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<GroundTruthLayout> {
    let (rows, cols) = spec
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("expected ROWSxCOLS, got {spec:?}"))?;
    let rows: u32 = rows.trim().parse().context("grid rows")?;
    let cols: u32 = cols.trim().parse().context("grid cols")?;
    if rows == 0 || cols == 0 {
        bail!("grid dimensions must be positive, got {spec:?}");
    }
    Ok(grid_layout(rows, cols))
}

/// `at=HH:MM;walks=N[;steps=N][;within=ID,ID,...]`
fn parse_schedule_entry(spec: &str) -> Result<ScheduleEntry> {
    let mut at: Option<NaiveTime> = None;
    let mut walks: Option<u32> = None;
    let mut steps: Option<u32> = None;
    let mut within: Option<BTreeSet<SensorId>> = None;
    for part in spec.split(';') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value in schedule part {part:?}"))?;
        match key.trim() {
            "at" => {
                let time = NaiveTime::parse_from_str(value.trim(), "%H:%M:%S")
                    .or_else(|_| NaiveTime::parse_from_str(value.trim(), "%H:%M"))
                    .map_err(|_| anyhow!("bad schedule time {value:?}"))?;
                at = Some(time);
            }
            "walks" => walks = Some(value.trim().parse().context("schedule walks")?),
            "steps" => steps = Some(value.trim().parse().context("schedule steps")?),
            "within" => {
                within = Some(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(SensorId::new)
                        .collect(),
                );
            }
            other => bail!("unknown schedule key {other:?}"),
        }
    }
    let at = at.ok_or_else(|| anyhow!("schedule entry {spec:?} is missing at=HH:MM"))?;
    let walks = walks.ok_or_else(|| anyhow!("schedule entry {spec:?} is missing walks=N"))?;
    let mut entry = ScheduleEntry::new(at, walks);
    entry.steps = steps;
    entry.within = within;
    Ok(entry)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let layout = match (&args.layout, &args.grid) {
        (Some(path), None) => GroundTruthLayout::load(path).map_err(PipelineError::GroundTruth)?,
        (None, Some(spec)) => parse_grid(spec)?,
        _ => unreachable!("clap enforces exactly one layout source"),
    };
    let schedule = args
        .schedule
        .iter()
        .map(|spec| parse_schedule_entry(spec))
        .collect::<Result<Vec<_>>>()?;
    let params = WalkParams {
        seed: args.seed,
        steps: args.steps,
        dwell_us: i64::from(args.dwell_seconds) * 1_000_000,
        rest_gap_us: i64::from(args.rest_gap_seconds) * 1_000_000,
        start_date: args.start_date,
        days: args.days,
        schedule,
    };
    let stream = generate_trace(&layout, &params).map_err(PipelineError::Synthesis)?;
    let text = stream.to_log_text();
    match &args.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if let Some(path) = &args.layout_out {
        std::fs::write(path, layout.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_mine(args: MineArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.transactions)
        .with_context(|| format!("reading {}", args.transactions.display()))?;
    let transactions: Vec<Transaction> = text
        .lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| line.split_whitespace().map(SensorId::new).collect())
        .collect();
    let mined = frequent_itemsets(&transactions, args.min_support);

    println!(
        "{} transactions, {} frequent itemsets at support {}",
        mined.transaction_count,
        mined.frequent.len(),
        args.min_support
    );
    let mut ordered: Vec<(&sensemap_core::Itemset, usize)> = mined
        .frequent
        .iter()
        .map(|(set, &count)| (set, count))
        .collect();
    ordered.sort_by(|a, b| {
        b.0.len()
            .cmp(&a.0.len())
            .then(b.1.cmp(&a.1))
            .then_with(|| a.0.cmp(b.0))
    });
    for (set, count) in &ordered {
        let items: Vec<String> = set.iter().map(|s| s.to_string()).collect();
        println!(
            "{} : {}/{}",
            items.join(" "),
            count,
            mined.transaction_count
        );
    }
    match mined.dominant() {
        Some((set, count)) => {
            let items: Vec<String> = set.iter().map(|s| s.to_string()).collect();
            println!(
                "dominant: {} ({}/{})",
                items.join(" "),
                count,
                mined.transaction_count
            );
        }
        None => println!("dominant: none"),
    }
    Ok(())
}
