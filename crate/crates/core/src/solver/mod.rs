//! Schedule solvers over the tournament graph.
//!
//! Unconstrained: one relaxation pass in topological order. Constrained:
//! exact label-setting with pairwise dominance. LARAC: Lagrangian search
//! over the multiplier, returning the best feasible path and a lower bound.

mod eval;
mod ilp;
mod oracle;

pub use eval::evaluate_schedule;
pub use ilp::{export_ilp, IlpModel};
pub use oracle::{brute_force, OracleOptions};

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, GraphEdge, NodeId, NodeRole, ScheduleGraph};
use crate::schedule::{breakdown_for, cmp_candidates, resource_for, Schedule, Segment};
use crate::types::Platform;

/// One S→F path. `cost` and `resource` are the plain per-edge sums,
/// independent of whatever weight the search minimized.
#[derive(Debug, Clone)]
struct Path {
    nodes: Vec<NodeId>,
    cost: f64,
    resource: f64,
}

fn edge_transition(kind: EdgeKind) -> u32 {
    match kind {
        EdgeKind::Eu | EdgeKind::Ed => 1,
        _ => 0,
    }
}

fn node_mobile_layers(graph: &ScheduleGraph, id: NodeId) -> u32 {
    match graph.nodes()[id].role {
        NodeRole::Group {
            platform: Platform::Mobile,
            span,
            ..
        } => (span.1 - span.0 + 1) as u32,
        _ => 0,
    }
}

/// Single-pass DAG relaxation under an arbitrary edge weight. Ties resolve
/// by the schedule preference order (fewer transitions, more mobile layers,
/// lexicographic segments), so results are deterministic.
fn dag_shortest(graph: &ScheduleGraph, weight: impl Fn(&GraphEdge) -> f64) -> Option<Path> {
    let count = graph.node_count();
    let mut cost = vec![f64::INFINITY; count];
    let mut trans = vec![0u32; count];
    let mut mob = vec![0u32; count];
    let mut pred: Vec<Option<NodeId>> = vec![None; count];
    cost[graph.source()] = 0.0;

    let walk_back = |pred: &[Option<NodeId>], tip: NodeId| -> Vec<NodeId> {
        let mut nodes = vec![tip];
        let mut cur = tip;
        while let Some(p) = pred[cur] {
            nodes.push(p);
            cur = p;
        }
        nodes.reverse();
        nodes
    };

    for &u in graph.topo_order() {
        if u != graph.source() && pred[u].is_none() {
            continue;
        }
        for e in graph.out_edges(u) {
            let v = e.to;
            let c = cost[u] + weight(e);
            let t = trans[u] + edge_transition(e.kind);
            let m = mob[u] + node_mobile_layers(graph, v);
            let better = match c.partial_cmp(&cost[v]) {
                Some(Ordering::Less) => true,
                Some(Ordering::Greater) => false,
                _ => {
                    if pred[v].is_none() && v != graph.source() {
                        true
                    } else {
                        match t.cmp(&trans[v]).then(mob[v].cmp(&m)) {
                            Ordering::Less => true,
                            Ordering::Greater => false,
                            Ordering::Equal => {
                                // Full numeric tie: compare decoded prefixes.
                                let mut cand = walk_back(&pred, u);
                                cand.push(v);
                                let stored = walk_back(&pred, v);
                                graph.decode_path(&cand).cmp(&graph.decode_path(&stored))
                                    == Ordering::Less
                            }
                        }
                    }
                }
            };
            if better {
                cost[v] = c;
                trans[v] = t;
                mob[v] = m;
                pred[v] = Some(u);
            }
        }
    }

    let sink = graph.sink();
    pred[sink]?;
    let nodes = walk_back(&pred, sink);
    let (plain_cost, resource) = path_sums(graph, &nodes);
    Some(Path {
        nodes,
        cost: plain_cost,
        resource,
    })
}

fn path_sums(graph: &ScheduleGraph, nodes: &[NodeId]) -> (f64, f64) {
    let mut cost = 0.0;
    let mut resource = 0.0;
    for w in nodes.windows(2) {
        let e = graph
            .out_edges(w[0])
            .find(|e| e.to == w[1])
            .expect("path edges exist");
        cost += e.cost;
        resource += e.resource;
    }
    (cost, resource)
}

/// Builds the full schedule for a decoded segment list, re-pricing it from
/// the cost tables rather than trusting accumulated edge weights.
fn schedule_from_segments(graph: &ScheduleGraph, segments: Vec<Segment>) -> Schedule {
    let costs = graph.costs();
    let breakdown = breakdown_for(costs, graph.objective, &segments, graph.expanded_blocks());
    let total_resource = graph
        .resource_metric
        .map(|rm| resource_for(costs, rm, &segments, graph.expanded_blocks()));
    Schedule {
        mode: graph.mode,
        objective: graph.objective,
        segments,
        total_cost: breakdown.total(),
        total_resource,
        breakdown,
    }
}

/// Minimum-cost schedule, ignoring any resource weights.
pub fn shortest_schedule(graph: &ScheduleGraph) -> Result<Schedule> {
    let path = dag_shortest(graph, |e| e.cost).ok_or_else(no_finite_path)?;
    if !path.cost.is_finite() {
        return Err(no_finite_path());
    }
    let segments = graph.decode_path(&path.nodes);
    let schedule = schedule_from_segments(graph, segments);
    debug_assert!(
        (schedule.total_cost - path.cost).abs() <= 1e-9 * path.cost.abs().max(1.0),
        "re-priced schedule diverged from path cost"
    );
    Ok(schedule)
}

fn no_finite_path() -> Error {
    Error::Infeasible {
        min_achievable_resource: f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy)]
struct Label {
    cost: f64,
    resource: f64,
    trans: u32,
    mob: u32,
    /// Predecessor (node, label index in that node's arena).
    pred: Option<(NodeId, usize)>,
    active: bool,
}

/// Exact resource-constrained shortest path by label-setting in topological
/// order with pairwise dominance. Resource comparisons are exact; no epsilon
/// merging.
pub fn constrained_schedule(graph: &ScheduleGraph, bound: f64) -> Result<Schedule> {
    let _ = graph.resource_metric.ok_or_else(|| {
        Error::Argument("constrained solve requires a graph built with a resource metric".into())
    })?;
    if !(bound >= 0.0) {
        return Err(Error::Argument(format!("bound {bound} must be >= 0")));
    }

    let count = graph.node_count();
    let mut labels: Vec<Vec<Label>> = vec![Vec::new(); count];
    labels[graph.source()].push(Label {
        cost: 0.0,
        resource: 0.0,
        trans: 0,
        mob: 0,
        pred: None,
        active: true,
    });

    let materialize = |labels: &[Vec<Label>], node: NodeId, idx: usize| -> Vec<NodeId> {
        let mut nodes = vec![node];
        let mut cur = labels[node][idx].pred;
        while let Some((p, pi)) = cur {
            nodes.push(p);
            cur = labels[p][pi].pred;
        }
        nodes.reverse();
        nodes
    };

    for &u in graph.topo_order() {
        for li in 0..labels[u].len() {
            if !labels[u][li].active {
                continue;
            }
            let base = labels[u][li];
            for e in graph.out_edges(u) {
                let v = e.to;
                let cand = Label {
                    cost: base.cost + e.cost,
                    resource: base.resource + e.resource,
                    trans: base.trans + edge_transition(e.kind),
                    mob: base.mob + node_mobile_layers(graph, v),
                    pred: Some((u, li)),
                    active: true,
                };
                if cand.resource > bound || !cand.cost.is_finite() {
                    continue;
                }
                let mut keep = true;
                let mut to_deactivate = Vec::new();
                for (xi, ex) in labels[v].iter().enumerate() {
                    if !ex.active {
                        continue;
                    }
                    if ex.cost <= cand.cost && ex.resource <= cand.resource {
                        if ex.cost == cand.cost && ex.resource == cand.resource {
                            // Same point in (cost, resource): the schedule
                            // preference order decides which survives.
                            let pref = match ex.trans.cmp(&cand.trans).then(cand.mob.cmp(&ex.mob)) {
                                Ordering::Equal => {
                                    let mut cp = materialize(&labels, u, li);
                                    cp.push(v);
                                    let sp = materialize(&labels, v, xi);
                                    graph.decode_path(&sp).cmp(&graph.decode_path(&cp))
                                }
                                o => o,
                            };
                            if pref != Ordering::Greater {
                                keep = false;
                                break;
                            }
                            to_deactivate.push(xi);
                        } else {
                            keep = false;
                            break;
                        }
                    } else if cand.cost <= ex.cost && cand.resource <= ex.resource {
                        to_deactivate.push(xi);
                    }
                }
                if keep {
                    for xi in to_deactivate {
                        labels[v][xi].active = false;
                    }
                    labels[v].push(cand);
                }
            }
        }
    }

    let sink = graph.sink();
    let mut best: Option<usize> = None;
    for (xi, l) in labels[sink].iter().enumerate() {
        if !l.active {
            continue;
        }
        let better = match best {
            None => true,
            Some(bi) => {
                let b = &labels[sink][bi];
                match l.cost.partial_cmp(&b.cost) {
                    Some(Ordering::Less) => true,
                    Some(Ordering::Greater) => false,
                    _ => {
                        let lp = materialize(&labels, sink, xi);
                        let bp = materialize(&labels, sink, bi);
                        cmp_candidates(
                            l.cost,
                            &graph.decode_path(&lp),
                            b.cost,
                            &graph.decode_path(&bp),
                        ) == Ordering::Less
                    }
                }
            }
        };
        if better {
            best = Some(xi);
        }
    }

    match best {
        Some(bi) => {
            let nodes = materialize(&labels, sink, bi);
            let segments = graph.decode_path(&nodes);
            Ok(schedule_from_segments(graph, segments))
        }
        None => {
            let min_resource = dag_shortest(graph, |e| e.resource)
                .map(|p| p.resource)
                .unwrap_or(f64::INFINITY);
            Err(Error::Infeasible {
                min_achievable_resource: min_resource,
            })
        }
    }
}

/// LARAC output: the best feasible schedule found plus the Lagrangian
/// bound bracketing the true constrained optimum from below.
#[derive(Debug, Clone)]
pub struct LaracResult {
    pub schedule: Schedule,
    pub lower_bound: f64,
}

const LARAC_MAX_ITERS: usize = 64;

/// Lagrangian-relaxation approximation of the constrained problem: binary
/// search over the multiplier on `cost + λ·resource`, solved by repeated
/// unconstrained shortest paths.
pub fn larac_schedule(graph: &ScheduleGraph, bound: f64) -> Result<LaracResult> {
    let _ = graph.resource_metric.ok_or_else(|| {
        Error::Argument("LARAC requires a graph built with a resource metric".into())
    })?;
    if !(bound >= 0.0) {
        return Err(Error::Argument(format!("bound {bound} must be >= 0")));
    }

    let finish = |graph: &ScheduleGraph, path: &Path, lower: f64| -> LaracResult {
        let segments = graph.decode_path(&path.nodes);
        LaracResult {
            schedule: schedule_from_segments(graph, segments),
            lower_bound: lower,
        }
    };

    let c_path = dag_shortest(graph, |e| e.cost).ok_or_else(no_finite_path)?;
    if !c_path.cost.is_finite() {
        return Err(no_finite_path());
    }
    if c_path.resource <= bound {
        // Constraint inactive; the unconstrained optimum is exact.
        let lower = c_path.cost;
        return Ok(finish(graph, &c_path, lower));
    }
    let r_path = dag_shortest(graph, |e| e.resource).ok_or_else(no_finite_path)?;
    if r_path.resource > bound {
        return Err(Error::Infeasible {
            min_achievable_resource: r_path.resource,
        });
    }

    let mut c_path = c_path;
    let mut r_path = r_path;
    // Any feasible path's cost upper-bounds the optimum; the unconstrained
    // minimum lower-bounds it.
    let mut lower = c_path.cost;
    let mut best_feasible = r_path.clone();

    for _ in 0..LARAC_MAX_ITERS {
        let denom = r_path.resource - c_path.resource;
        if denom >= 0.0 {
            break;
        }
        let lambda = (r_path.cost - c_path.cost) / -denom;
        if !lambda.is_finite() || lambda <= 0.0 {
            break;
        }
        let p = match dag_shortest(graph, |e| e.cost + lambda * e.resource) {
            Some(p) => p,
            None => break,
        };
        let aggregated = p.cost + lambda * p.resource;
        lower = lower.max(aggregated - lambda * bound);
        let agg_c = c_path.cost + lambda * c_path.resource;
        if (aggregated - agg_c).abs() <= 1e-12 * agg_c.abs().max(1.0) {
            break;
        }
        if p.resource <= bound {
            if p.cost < best_feasible.cost {
                best_feasible = p.clone();
            }
            r_path = p;
        } else {
            c_path = p;
        }
    }

    if best_feasible.cost < lower {
        // Numerical guard; mathematically lower <= optimum <= feasible cost.
        lower = best_feasible.cost;
    }
    Ok(finish(graph, &best_feasible, lower))
}
