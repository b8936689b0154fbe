//! Layer-granularity mobile/cloud execution planning for deep networks.
//!
//! Given grouped execution profiles of a layer chain on a mobile device and
//! a cloud server, plus a link model, this crate decides which consecutive
//! layer groups run where. The decision problem reduces to shortest path on
//! a tournament DAG of platform-tagged layer groups; battery, cloud-load and
//! QoS variants become resource-constrained shortest path, solved exactly by
//! label-setting or approximately by Lagrangian relaxation. An LP-format
//! exporter mirrors the exact integer program for external verification, and
//! a brute-force enumerator serves as the in-tree ground truth.

// `!(x >= 0.0)`-style guards are deliberate: they reject NaN along with
// the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cost;
pub mod error;
pub mod graph;
pub mod instance;
pub mod lookup;
pub mod scenario;
pub mod schedule;
pub mod solver;
pub mod types;

pub use chain::{ChainCosts, MirrorPolicy, TrainingOptions};
pub use cost::{
    effective_transfer_bytes, link_power, transfer_cost, CompressionConfig, TransferCost,
};
pub use error::{Error, Result};
pub use graph::{build_inference_graph, build_training_graph, ScheduleGraph};
pub use instance::synth::{synth_benchmark, synth_benchmark_document, BenchmarkShape};
pub use instance::{Document, LinkProfile, ProblemInstance};
pub use lookup::{query_lookup, sweep_lookup, AxisGrid, AxisValue, LookupTable};
pub use scenario::{
    build_scenario_graph, solve_scenario, Constraint, Report, ScenarioSpec, SolveOutcome,
    SolverKind,
};
pub use schedule::{CostBreakdown, Schedule, Segment};
pub use solver::{
    brute_force, constrained_schedule, evaluate_schedule, export_ilp, larac_schedule,
    shortest_schedule, IlpModel, LaracResult, OracleOptions,
};
pub use types::{Metric, Mode, Platform, ResourceMetric, UNREACHABLE};
