//! Exhaustive enumeration oracle.
//!
//! Walks every 2^n platform assignment and prices each one straight from
//! the cost tables. No graph, no relaxation: this is the ground truth the
//! path solvers are tested against, kept deliberately naive.

use std::cmp::Ordering;

use crate::chain::{ChainCosts, TrainingOptions};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::schedule::{
    breakdown_for, cmp_candidates, resource_for, segments_from_assignment, Schedule, Segment,
};
use crate::types::{Metric, Mode, Platform, ResourceMetric};

/// Enumeration limits: 2^16 assignments at most.
const MAX_INFERENCE_LAYERS: usize = 16;
const MAX_TRAINING_LAYERS: usize = 8;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub mode: Mode,
    pub objective: Metric,
    pub resource_metric: Option<ResourceMetric>,
    pub bound: Option<f64>,
    pub training: TrainingOptions,
}

impl OracleOptions {
    pub fn unconstrained(mode: Mode, objective: Metric) -> Self {
        OracleOptions {
            mode,
            objective,
            resource_metric: None,
            bound: None,
            training: TrainingOptions::default(),
        }
    }
}

/// Optimal schedule by exhaustive enumeration. Refuses chains long enough
/// to make 2^n unpleasant.
pub fn brute_force(instance: &ProblemInstance, opts: &OracleOptions) -> Result<Schedule> {
    let n_layers = instance.layer_count();
    let (costs, limit) = match opts.mode {
        Mode::Inference => (ChainCosts::inference(instance)?, MAX_INFERENCE_LAYERS),
        Mode::Training => (
            ChainCosts::training(instance, &opts.training)?,
            MAX_TRAINING_LAYERS,
        ),
    };
    if n_layers > limit {
        return Err(Error::Argument(format!(
            "oracle enumeration limited to {limit} layers in {} mode (instance has {n_layers})",
            opts.mode
        )));
    }
    if opts.bound.is_some() && opts.resource_metric.is_none() {
        return Err(Error::Argument("a bound requires a resource metric".into()));
    }
    // Skip transfers only exist in the inference chain; training ignores
    // declared blocks, matching the graph builder.
    let blocks = match opts.mode {
        Mode::Inference => instance.residual_blocks(),
        Mode::Training => &[],
    };

    let n = costs.n;
    let mut best: Option<(f64, Vec<Segment>, f64)> = None;
    let mut min_resource = f64::INFINITY;

    for mask in 0u64..(1u64 << n) {
        let assignment: Vec<Platform> = (0..n)
            .map(|k| {
                if mask & (1 << k) != 0 {
                    Platform::Cloud
                } else {
                    Platform::Mobile
                }
            })
            .collect();
        let segments = segments_from_assignment(&assignment);
        let cost = breakdown_for(&costs, opts.objective, &segments, blocks).total();
        let resource = opts
            .resource_metric
            .map(|rm| resource_for(&costs, rm, &segments, blocks))
            .unwrap_or(0.0);
        if let Some(rm) = opts.resource_metric {
            let _ = rm;
            min_resource = min_resource.min(resource);
        }
        if let Some(bound) = opts.bound {
            if resource > bound {
                continue;
            }
        }
        if !cost.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bc, bs, _)) => cmp_candidates(cost, &segments, *bc, bs) == Ordering::Less,
        };
        if better {
            best = Some((cost, segments, resource));
        }
    }

    match best {
        Some((_, segments, _)) => {
            let breakdown = breakdown_for(&costs, opts.objective, &segments, blocks);
            let total_resource = opts
                .resource_metric
                .map(|rm| resource_for(&costs, rm, &segments, blocks));
            Ok(Schedule {
                mode: opts.mode,
                objective: opts.objective,
                segments,
                total_cost: breakdown.total(),
                total_resource,
                breakdown,
            })
        }
        None => Err(Error::Infeasible {
            min_achievable_resource: min_resource,
        }),
    }
}
