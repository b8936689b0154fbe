//! `offload` — schedule deep-network layer chains across mobile and cloud.
//!
//! Machine-readable results go to stdout; warnings and diagnostics go to
//! stderr. Exit codes: 0 success, 1 infeasible, 2 validation/argument
//! error, 3 internal-consistency error.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use offload_core::lookup::{AxisGrid, AxisValue, DEFAULT_CELL_CAP};
use offload_core::scenario::{build_report, Constraint, ScenarioSpec, SolverKind};
use offload_core::{
    brute_force, evaluate_schedule, export_ilp, query_lookup, solve_scenario, sweep_lookup,
    BenchmarkShape, CompressionConfig, Error, LookupTable, Metric, Mode, OracleOptions,
    ProblemInstance, Report, Schedule,
};

#[derive(Parser)]
#[command(
    name = "offload",
    about = "Layer-granularity mobile/cloud execution planner",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print the schedule with its report.
    Solve(SolveArgs),
    /// Emit the scenario's exact integer program in LP format.
    ExportIlp(ExportArgs),
    /// Precompute a lookup table over environment grids, or query one.
    Sweep(SweepArgs),
    /// Generate a synthetic benchmark profile document.
    Synth(SynthArgs),
    /// Re-price a previously printed schedule against an instance.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Path to the profile document (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Objective to minimize.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Latency)]
    objective: ObjectiveArg,
    /// Schedule the forward+backward chain instead of inference.
    #[arg(long)]
    training: bool,
    /// Training: fraction of weights refreshed in the cloud per step.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Battery budget in mJ (objective must be latency).
    #[arg(long)]
    battery: Option<f64>,
    /// Cloud execution-time budget in ms (objective must be latency).
    #[arg(long)]
    cloud_time: Option<f64>,
    /// Latency deadline in ms (objective must be energy).
    #[arg(long)]
    qos: Option<f64>,
    /// Use the Lagrangian approximation instead of the exact solver.
    #[arg(long)]
    larac: bool,
    /// Compress layer outputs before transfer.
    #[arg(long)]
    compress: bool,
    /// Quantization width used with --compress.
    #[arg(long, default_value_t = 8)]
    quantize_bits: u32,
    /// Fallback compression ratio for layers without one.
    #[arg(long, default_value_t = 1.0)]
    default_cr: f64,
    /// Batch multiplier applied to transfer sizes.
    #[arg(long, default_value_t = 1)]
    batch: u32,
}

impl ScenarioArgs {
    fn load_instance(&self) -> Result<ProblemInstance, Error> {
        let text = std::fs::read_to_string(&self.instance)?;
        let instance = ProblemInstance::from_json(&text)?;
        for w in instance.warnings() {
            eprintln!("warning: {w}");
        }
        instance.with_batch(self.batch)
    }

    fn scenario(&self) -> Result<ScenarioSpec, Error> {
        let mode = if self.training {
            Mode::Training
        } else {
            Mode::Inference
        };
        let constraint = match (self.battery, self.cloud_time, self.qos) {
            (None, None, None) => Constraint::None,
            (Some(b), None, None) => Constraint::Battery(b),
            (None, Some(b), None) => Constraint::CloudTime(b),
            (None, None, Some(b)) => Constraint::Qos(b),
            _ => {
                return Err(Error::Argument(
                    "at most one of --battery, --cloud-time, --qos".into(),
                ))
            }
        };
        let compression = if self.compress {
            Some(CompressionConfig {
                enabled: true,
                quantize_bits: self.quantize_bits,
                default_ratio: self.default_cr,
                ..CompressionConfig::default()
            })
        } else {
            None
        };
        let spec = ScenarioSpec {
            mode,
            objective: self.objective.into(),
            constraint,
            update_fraction: if self.training { self.rho } else { 0.0 },
            compression,
            solver: if self.larac {
                SolverKind::Larac
            } else {
                SolverKind::Exact
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ObjectiveArg {
    Latency,
    Energy,
}

impl From<ObjectiveArg> for Metric {
    fn from(o: ObjectiveArg) -> Metric {
        match o {
            ObjectiveArg::Latency => Metric::Latency,
            ObjectiveArg::Energy => Metric::Energy,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Human,
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output format; human text uses 6 decimals, json/csv full precision.
    #[arg(long, value_enum, default_value_t = FormatArg::Human)]
    format: FormatArg,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Debugging: solve by exhaustive enumeration instead of the graph.
    #[arg(long, hide = true)]
    oracle: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Write the LP text here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Uplink grid, Mbps (comma-separated).
    #[arg(long, value_delimiter = ',')]
    uplink: Vec<f64>,
    /// Downlink grid, Mbps.
    #[arg(long, value_delimiter = ',')]
    downlink: Vec<f64>,
    /// Link preset grid (3G, 4G, WiFi).
    #[arg(long, value_delimiter = ',')]
    link_name: Vec<String>,
    /// Batch grid.
    #[arg(long, value_delimiter = ',')]
    batch_grid: Vec<u32>,
    /// Training update-fraction grid.
    #[arg(long, value_delimiter = ',')]
    rho_grid: Vec<f64>,
    /// Maximum number of cells the sweep may produce.
    #[arg(long, default_value_t = DEFAULT_CELL_CAP)]
    cap: usize,
    /// Lookup table file to write (or to query with --query).
    #[arg(long)]
    out: PathBuf,
    /// Query the table at "axis=value,axis=value" instead of sweeping.
    #[arg(long)]
    query: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// discriminative, generative, or autoencoder.
    #[arg(long)]
    shape: String,
    #[arg(long)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Profile document path to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Schedule JSON produced by `solve --format json`.
    #[arg(long)]
    schedule: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::ExportIlp(args) => cmd_export_ilp(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::from(0),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible { .. } => 1,
        Error::InternalConsistency(_) => 3,
        _ => 2,
    }
}

fn write_out(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), Error> {
    let instance = args.scenario.load_instance()?;
    let spec = args.scenario.scenario()?;
    if spec.mode == Mode::Training && !instance.residual_blocks().is_empty() {
        eprintln!("warning: residual blocks are ignored when scheduling training");
    }

    let (schedule, report, lower_bound) = if args.oracle {
        let opts = OracleOptions {
            mode: spec.mode,
            objective: spec.objective,
            resource_metric: spec.resource_metric(),
            bound: spec.bound(),
            training: offload_core::TrainingOptions::with_update_fraction(spec.update_fraction),
        };
        let prepared = match &spec.compression {
            Some(cfg) => instance.apply_compression(cfg)?,
            None => instance.clone(),
        };
        let schedule = brute_force(&prepared, &opts)?;
        let report = build_report(&prepared, &spec, &schedule)?;
        (schedule, report, None)
    } else {
        let outcome = solve_scenario(&instance, &spec)?;
        (outcome.schedule, outcome.report, outcome.lower_bound)
    };

    let content = match args.format {
        FormatArg::Human => render_human(&spec, &schedule, &report, lower_bound),
        FormatArg::Json => render_json(&spec, &schedule, &report, lower_bound),
        FormatArg::Csv => render_csv(&spec, &schedule, &report),
    };
    write_out(&args.out, &content)
}

fn render_human(
    spec: &ScenarioSpec,
    schedule: &Schedule,
    report: &Report,
    lower_bound: Option<f64>,
) -> String {
    use std::fmt::Write;
    let unit = match spec.objective {
        Metric::Latency => "ms",
        Metric::Energy => "mJ",
    };
    let mut s = String::new();
    writeln!(s, "mode: {}", spec.mode).unwrap();
    writeln!(s, "objective: {}", spec.objective).unwrap();
    writeln!(s, "constraint: {}", spec.constraint.label()).unwrap();
    let segs: Vec<String> = schedule
        .segments
        .iter()
        .map(|g| format!("{}[{}..{}]", g.platform.letter(), g.start, g.end))
        .collect();
    writeln!(s, "segments: {}", segs.join(" ")).unwrap();
    writeln!(s, "pattern: {}", schedule.pattern()).unwrap();
    writeln!(s, "total: {:.6} {unit}", schedule.total_cost).unwrap();
    if let Some(r) = schedule.total_resource {
        writeln!(s, "resource: {r:.6}").unwrap();
    }
    if let Some(lb) = lower_bound {
        writeln!(s, "larac lower bound: {lb:.6}").unwrap();
    }
    let b = &schedule.breakdown;
    writeln!(s, "computation: {:.6}", b.computation).unwrap();
    writeln!(s, "upload: {:.6}", b.upload).unwrap();
    writeln!(s, "download: {:.6}", b.download).unwrap();
    writeln!(s, "weight_download: {:.6}", b.weight_download).unwrap();
    writeln!(s, "compression_overhead: {:.6}", b.compression_overhead).unwrap();
    writeln!(s, "mobile_only: {:.6} {unit}", report.mobile_only.total()).unwrap();
    writeln!(s, "cloud_only: {:.6} {unit}", report.cloud_only.total()).unwrap();
    writeln!(
        s,
        "latency_improvement_pct: {:.6}",
        report.latency_improvement_pct
    )
    .unwrap();
    writeln!(
        s,
        "energy_improvement_pct: {:.6}",
        report.energy_improvement_pct
    )
    .unwrap();
    writeln!(
        s,
        "cloud_workload_reduction_pct: {:.6}",
        report.cloud_workload_reduction_pct
    )
    .unwrap();
    s
}

fn render_json(
    spec: &ScenarioSpec,
    schedule: &Schedule,
    report: &Report,
    lower_bound: Option<f64>,
) -> String {
    let value = serde_json::json!({
        "scenario": spec,
        "schedule": schedule,
        "pattern": schedule.pattern(),
        "report": report,
        "larac_lower_bound": lower_bound,
    });
    serde_json::to_string_pretty(&value).expect("serializable")
}

fn render_csv(spec: &ScenarioSpec, schedule: &Schedule, report: &Report) -> String {
    let b = &schedule.breakdown;
    let header = "scenario,objective,constraint,total,computation,upload,download,\
                  weight_download,pattern,latency_improvement_pct,energy_improvement_pct,\
                  cloud_workload_reduction_pct";
    format!(
        "{header}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        spec.mode,
        spec.objective,
        spec.constraint.label(),
        schedule.total_cost,
        b.computation,
        b.upload,
        b.download,
        b.weight_download,
        schedule.pattern(),
        report.latency_improvement_pct,
        report.energy_improvement_pct,
        report.cloud_workload_reduction_pct
    )
}

fn cmd_export_ilp(args: ExportArgs) -> Result<(), Error> {
    let instance = args.scenario.load_instance()?;
    let spec = args.scenario.scenario()?;
    let prepared = match &spec.compression {
        Some(cfg) => instance.apply_compression(cfg)?,
        None => instance,
    };
    let text = export_ilp(&prepared, &spec)?;
    write_out(&args.out, &text)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let instance = args.scenario.load_instance()?;
    let spec = args.scenario.scenario()?;

    if let Some(query) = &args.query {
        let text = std::fs::read_to_string(&args.out)?;
        let table = LookupTable::from_json(&text)?;
        let point = parse_query(query)?;
        let cell = query_lookup(&table, instance.content_hash(), &point)?;
        let value = serde_json::json!({
            "point": cell.point,
            "pattern": cell.pattern,
            "schedule": cell.schedule,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("serializable")
        );
        return Ok(());
    }

    let mut axes = Vec::new();
    if !args.uplink.is_empty() {
        axes.push(AxisGrid {
            name: "uplink_mbps".into(),
            values: args.uplink.iter().map(|&v| AxisValue::Num(v)).collect(),
        });
    }
    if !args.downlink.is_empty() {
        axes.push(AxisGrid {
            name: "downlink_mbps".into(),
            values: args.downlink.iter().map(|&v| AxisValue::Num(v)).collect(),
        });
    }
    if !args.link_name.is_empty() {
        axes.push(AxisGrid {
            name: "link_name".into(),
            values: args
                .link_name
                .iter()
                .map(|v| AxisValue::Name(v.clone()))
                .collect(),
        });
    }
    if !args.batch_grid.is_empty() {
        axes.push(AxisGrid {
            name: "batch".into(),
            values: args
                .batch_grid
                .iter()
                .map(|&v| AxisValue::Num(v as f64))
                .collect(),
        });
    }
    if !args.rho_grid.is_empty() {
        axes.push(AxisGrid {
            name: "rho".into(),
            values: args.rho_grid.iter().map(|&v| AxisValue::Num(v)).collect(),
        });
    }

    let table = sweep_lookup(&instance, axes, &spec, args.cap)?;
    std::fs::write(&args.out, table.to_json())?;
    println!("{} cells", table.cells.len());
    Ok(())
}

fn parse_query(query: &str) -> Result<BTreeMap<String, AxisValue>, Error> {
    let mut point = BTreeMap::new();
    for part in query.split(',') {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Argument(format!("query part '{part}' is not axis=value")))?;
        let value = match value.parse::<f64>() {
            Ok(v) => AxisValue::Num(v),
            Err(_) => AxisValue::Name(value.trim().to_string()),
        };
        point.insert(name.trim().to_string(), value);
    }
    Ok(point)
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let shape = BenchmarkShape::from_str(&args.shape)?;
    let doc = offload_core::synth_benchmark_document(shape, args.layers, args.seed)?;
    std::fs::write(&args.out, doc.to_json_pretty())?;
    eprintln!(
        "wrote {} ({} layers, seed {})",
        args.out.display(),
        args.layers,
        args.seed
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let instance = args.scenario.load_instance()?;
    let spec = args.scenario.scenario()?;
    let text = std::fs::read_to_string(&args.schedule)?;
    let parsed: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("schedule document: {e}")))?;
    // accept either a bare schedule or the full `solve --format json` output
    let schedule_value = parsed.get("schedule").cloned().unwrap_or(parsed);
    let schedule: Schedule = serde_json::from_value(schedule_value)
        .map_err(|e| Error::Parse(format!("schedule document: {e}")))?;
    let breakdown = evaluate_schedule(&instance, &schedule, &spec)?;
    let value = serde_json::json!({
        "total": breakdown.total(),
        "breakdown": breakdown,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("serializable")
    );
    Ok(())
}
