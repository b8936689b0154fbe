//! Scenario dispatch: objective + optional constraint → the right solver,
//! plus baseline-relative reporting.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainCosts, TrainingOptions};
use crate::cost::CompressionConfig;
use crate::error::{Error, Result};
use crate::graph::{build_inference_graph, build_training_graph, ScheduleGraph};
use crate::instance::ProblemInstance;
use crate::schedule::{breakdown_for, CostBreakdown, Schedule, Segment};
use crate::solver::{constrained_schedule, larac_schedule, shortest_schedule};
use crate::types::{Metric, Mode, Platform, ResourceMetric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    None,
    /// Mobile energy budget, mJ: minimize latency subject to it.
    Battery(f64),
    /// Cloud execution-time budget, ms: minimize latency subject to it.
    CloudTime(f64),
    /// Latency deadline, ms: minimize mobile energy subject to it.
    Qos(f64),
}

impl Constraint {
    pub fn label(&self) -> String {
        match self {
            Constraint::None => "none".into(),
            Constraint::Battery(b) => format!("battery={b}"),
            Constraint::CloudTime(b) => format!("cloud_time={b}"),
            Constraint::Qos(b) => format!("qos={b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Larac,
}

/// Everything that defines one optimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub mode: Mode,
    pub objective: Metric,
    pub constraint: Constraint,
    /// Training only: fraction of weights refreshed in the cloud per step.
    #[serde(default)]
    pub update_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compression: Option<CompressionConfig>,
    pub solver: SolverKind,
}

impl ScenarioSpec {
    pub fn unconstrained(mode: Mode, objective: Metric) -> Self {
        ScenarioSpec {
            mode,
            objective,
            constraint: Constraint::None,
            update_fraction: 0.0,
            compression: None,
            solver: SolverKind::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut failures = Vec::new();
        match self.constraint {
            Constraint::Qos(b) => {
                if self.objective != Metric::Energy {
                    failures
                        .push("qos bounds latency, so the objective must be energy".to_string());
                }
                if !(b >= 0.0) {
                    failures.push(format!("qos bound {b} must be >= 0"));
                }
            }
            Constraint::Battery(b) => {
                if self.objective != Metric::Latency {
                    failures.push("battery bounds energy, so the objective must be latency".into());
                }
                if !(b >= 0.0) {
                    failures.push(format!("battery bound {b} must be >= 0"));
                }
            }
            Constraint::CloudTime(b) => {
                if self.objective != Metric::Latency {
                    failures.push(
                        "cloud_time bounds cloud execution, so the objective must be latency"
                            .into(),
                    );
                }
                if !(b >= 0.0) {
                    failures.push(format!("cloud_time bound {b} must be >= 0"));
                }
            }
            Constraint::None => {}
        }
        if !(0.0..=1.0).contains(&self.update_fraction) {
            failures.push(format!(
                "update_fraction {} not in [0,1]",
                self.update_fraction
            ));
        }
        if self.mode == Mode::Inference && self.update_fraction != 0.0 {
            failures.push("update_fraction only applies to training".into());
        }
        if let Some(cfg) = &self.compression {
            if let Err(Error::Validation { failures: mut f }) = cfg.validate() {
                failures.append(&mut f);
            }
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { failures })
        }
    }

    /// The resource metric the constraint is measured in, if any.
    pub fn resource_metric(&self) -> Option<ResourceMetric> {
        match self.constraint {
            Constraint::None => None,
            Constraint::Battery(_) => Some(ResourceMetric::Energy),
            Constraint::CloudTime(_) => Some(ResourceMetric::CloudTime),
            Constraint::Qos(_) => Some(ResourceMetric::Latency),
        }
    }

    pub fn bound(&self) -> Option<f64> {
        match self.constraint {
            Constraint::None => None,
            Constraint::Battery(b) | Constraint::CloudTime(b) | Constraint::Qos(b) => Some(b),
        }
    }

    pub(crate) fn training_options(&self) -> TrainingOptions {
        TrainingOptions::with_update_fraction(self.update_fraction)
    }
}

/// Joint schedule vs the two single-platform baselines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub mobile_only: CostBreakdown,
    pub cloud_only: CostBreakdown,
    pub joint: CostBreakdown,
    pub latency_improvement_pct: f64,
    pub energy_improvement_pct: f64,
    pub cloud_workload_reduction_pct: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub schedule: Schedule,
    pub report: Report,
    /// LARAC only: Lagrangian lower bound on the constrained optimum.
    pub lower_bound: Option<f64>,
}

/// Builds the graph a scenario needs, residual blocks expanded.
pub fn build_scenario_graph(
    instance: &ProblemInstance,
    spec: &ScenarioSpec,
) -> Result<ScheduleGraph> {
    let mut graph = match spec.mode {
        Mode::Inference => build_inference_graph(instance, spec.objective, spec.resource_metric())?,
        Mode::Training => build_training_graph(
            instance,
            spec.objective,
            &spec.training_options(),
            spec.resource_metric(),
        )?,
    };
    if spec.mode == Mode::Inference {
        for block in instance.residual_blocks() {
            graph = graph.expand_residual(block)?;
        }
    }
    Ok(graph)
}

/// Solves one scenario end to end and attaches the baseline report.
pub fn solve_scenario(instance: &ProblemInstance, spec: &ScenarioSpec) -> Result<SolveOutcome> {
    spec.validate()?;
    let prepared = match &spec.compression {
        Some(cfg) => instance.apply_compression(cfg)?,
        None => instance.clone(),
    };
    let graph = build_scenario_graph(&prepared, spec)?;
    let (schedule, lower_bound) = match (spec.bound(), spec.solver) {
        (None, _) => (shortest_schedule(&graph)?, None),
        (Some(bound), SolverKind::Exact) => (constrained_schedule(&graph, bound)?, None),
        (Some(bound), SolverKind::Larac) => {
            let r = larac_schedule(&graph, bound)?;
            (r.schedule, Some(r.lower_bound))
        }
    };
    let report = build_report(&prepared, spec, &schedule)?;
    Ok(SolveOutcome {
        schedule,
        report,
        lower_bound,
    })
}

/// Baselines come from the same instance: mobile-only is ME(1,n), cloud-only
/// is input upload + CE(1,n) + final download. Improvements are measured
/// against the better baseline per metric.
pub fn build_report(
    instance: &ProblemInstance,
    spec: &ScenarioSpec,
    schedule: &Schedule,
) -> Result<Report> {
    let costs = match spec.mode {
        Mode::Inference => ChainCosts::inference(instance)?,
        Mode::Training => ChainCosts::training(instance, &spec.training_options())?,
    };
    let blocks = match spec.mode {
        Mode::Inference => instance.residual_blocks(),
        Mode::Training => &[],
    };
    let single = |platform: Platform| -> Vec<Segment> {
        vec![Segment {
            start: 1,
            end: costs.n,
            platform,
        }]
    };
    let mobile_segs = single(Platform::Mobile);
    let cloud_segs = single(Platform::Cloud);

    let price =
        |segs: &[Segment], metric: Metric| breakdown_for(&costs, metric, segs, blocks).total();
    let joint_lat = price(&schedule.segments, Metric::Latency);
    let joint_en = price(&schedule.segments, Metric::Energy);
    let best_lat = price(&mobile_segs, Metric::Latency).min(price(&cloud_segs, Metric::Latency));
    let best_en = price(&mobile_segs, Metric::Energy).min(price(&cloud_segs, Metric::Energy));

    let improvement = |joint: f64, best: f64| -> f64 {
        if best > 0.0 && best.is_finite() {
            100.0 * (1.0 - joint / best)
        } else {
            0.0
        }
    };

    let cloud_exec = |segs: &[Segment]| -> f64 {
        segs.iter()
            .filter(|s| s.platform == Platform::Cloud)
            .map(|s| costs.cloud_exec_latency(s.start, s.end))
            .sum()
    };
    let joint_cloud = cloud_exec(&schedule.segments);
    let full_cloud = cloud_exec(&cloud_segs);
    let cloud_workload_reduction_pct = if full_cloud > 0.0 {
        100.0 * (1.0 - joint_cloud / full_cloud)
    } else {
        0.0
    };

    Ok(Report {
        mobile_only: breakdown_for(&costs, spec.objective, &mobile_segs, blocks),
        cloud_only: breakdown_for(&costs, spec.objective, &cloud_segs, blocks),
        joint: breakdown_for(&costs, spec.objective, &schedule.segments, blocks),
        latency_improvement_pct: improvement(joint_lat, best_lat),
        energy_improvement_pct: improvement(joint_en, best_en),
        cloud_workload_reduction_pct,
    })
}
