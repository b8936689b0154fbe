//! The tournament scheduling graph.
//!
//! Group node `M[i:j]` / `C[i:j]` means layers i..=j run as one unit on that
//! platform. Every S→F path visits spans that tile the chain, so paths are
//! exactly the valid schedules. Node execution costs are folded into each
//! node's incoming edges; cross-platform edges additionally carry the
//! boundary tensor's transfer cost, and edges into cloud nodes carry that
//! span's weight-download cost in training mode.

use crate::chain::{ChainCosts, TrainingOptions};
use crate::error::{Error, Result};
use crate::instance::{ProblemInstance, ResidualBlock};
use crate::schedule::Segment;
use crate::types::{Metric, Mode, Platform, ResourceMetric};

pub type NodeId = usize;

/// Residual-chain annotation: inside an expanded block, this copy of the
/// node remembers where the block's source layer ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainTag {
    pub block: usize,
    pub source_platform: Platform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Source,
    Sink,
    Group {
        platform: Platform,
        span: (usize, usize),
        tag: Option<ChainTag>,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct GraphNode {
    pub id: NodeId,
    pub role: NodeRole,
}

impl GraphNode {
    pub fn group(&self) -> Option<(Platform, (usize, usize))> {
        match self.role {
            NodeRole::Group { platform, span, .. } => Some((platform, span)),
            _ => None,
        }
    }

    fn span_end(&self, n: usize) -> usize {
        match self.role {
            NodeRole::Source => 0,
            NodeRole::Sink => n + 1,
            NodeRole::Group { span, .. } => span.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// mobile → mobile
    Me,
    /// cloud → cloud
    Ce,
    /// mobile → cloud (upload)
    Eu,
    /// cloud → mobile (download)
    Ed,
    SourceEntry,
    SinkExit,
}

impl EdgeKind {
    fn label(self) -> &'static str {
        match self {
            EdgeKind::Me => "ME",
            EdgeKind::Ce => "CE",
            EdgeKind::Eu => "EU",
            EdgeKind::Ed => "ED",
            EdgeKind::SourceEntry => "source_entry",
            EdgeKind::SinkExit => "sink_exit",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GraphEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub cost: f64,
    pub resource: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone)]
pub struct ScheduleGraph {
    pub mode: Mode,
    pub objective: Metric,
    pub resource_metric: Option<ResourceMetric>,
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    out: Vec<Vec<usize>>,
    topo: Vec<NodeId>,
    source: NodeId,
    sink: NodeId,
    n: usize,
    costs: ChainCosts,
    expanded: Vec<ResidualBlock>,
}

/// Builds the inference graph over the instance's N layers.
pub fn build_inference_graph(
    instance: &ProblemInstance,
    objective: Metric,
    resource_metric: Option<ResourceMetric>,
) -> Result<ScheduleGraph> {
    let costs = ChainCosts::inference(instance)?;
    Ok(build_core(
        costs,
        Mode::Inference,
        objective,
        resource_metric,
    ))
}

/// Builds the training graph over 2N layers. Cloud spans covering backward
/// layers pay the rho-scaled weight download on their incoming edges.
pub fn build_training_graph(
    instance: &ProblemInstance,
    objective: Metric,
    opts: &TrainingOptions,
    resource_metric: Option<ResourceMetric>,
) -> Result<ScheduleGraph> {
    let costs = ChainCosts::training(instance, opts)?;
    Ok(build_core(
        costs,
        Mode::Training,
        objective,
        resource_metric,
    ))
}

fn build_core(
    costs: ChainCosts,
    mode: Mode,
    objective: Metric,
    resource_metric: Option<ResourceMetric>,
) -> ScheduleGraph {
    let n = costs.n;
    let mut nodes = Vec::with_capacity(n * (n + 1) + 2);
    nodes.push(GraphNode {
        id: 0,
        role: NodeRole::Source,
    });
    // Group nodes ordered by span end: that order is already topological.
    for j in 1..=n {
        for i in 1..=j {
            for platform in [Platform::Mobile, Platform::Cloud] {
                nodes.push(GraphNode {
                    id: nodes.len(),
                    role: NodeRole::Group {
                        platform,
                        span: (i, j),
                        tag: None,
                    },
                });
            }
        }
    }
    let sink = nodes.len();
    nodes.push(GraphNode {
        id: sink,
        role: NodeRole::Sink,
    });

    let mut graph = ScheduleGraph {
        mode,
        objective,
        resource_metric,
        nodes,
        edges: Vec::new(),
        out: Vec::new(),
        topo: Vec::new(),
        source: 0,
        sink,
        n,
        costs,
        expanded: Vec::new(),
    };
    graph.populate_edges();
    graph
}

impl ScheduleGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn out_edges(&self, node: NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.out[node].iter().map(move |&e| &self.edges[e])
    }

    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    /// Chain length the graph schedules (N, or 2N in training mode).
    pub fn layer_count(&self) -> usize {
        self.n
    }

    pub fn costs(&self) -> &ChainCosts {
        &self.costs
    }

    pub fn expanded_blocks(&self) -> &[ResidualBlock] {
        &self.expanded
    }

    /// Cost of entering a group node from `prev`, under `metric`.
    fn entry_cost(
        &self,
        metric: Metric,
        prev: Option<Platform>,
        platform: Platform,
        span: (usize, usize),
    ) -> f64 {
        let mut cost = self.costs.exec(platform, metric, span.0, span.1);
        let boundary = span.0 - 1;
        match (prev, platform) {
            (None, Platform::Cloud) => {
                cost += self.costs.upload(metric, 0) + self.costs.overhead(metric, 0);
            }
            (Some(Platform::Mobile), Platform::Cloud) => {
                cost += self.costs.upload(metric, boundary) + self.costs.overhead(metric, boundary);
            }
            (Some(Platform::Cloud), Platform::Mobile) => {
                cost +=
                    self.costs.download(metric, boundary) + self.costs.overhead(metric, boundary);
            }
            _ => {}
        }
        if platform == Platform::Cloud {
            cost += self.costs.weight_download(metric, span.0, span.1);
        }
        cost
    }

    fn entry_resource(
        &self,
        prev: Option<Platform>,
        platform: Platform,
        span: (usize, usize),
    ) -> f64 {
        match self.resource_metric {
            None => 0.0,
            Some(ResourceMetric::Latency) => self.entry_cost(Metric::Latency, prev, platform, span),
            Some(ResourceMetric::Energy) => self.entry_cost(Metric::Energy, prev, platform, span),
            Some(ResourceMetric::CloudTime) => match platform {
                Platform::Cloud => self.costs.cloud_exec_latency(span.0, span.1),
                Platform::Mobile => 0.0,
            },
        }
    }

    fn exit_cost(&self, metric: Metric, platform: Platform) -> f64 {
        match platform {
            Platform::Cloud => {
                self.costs.download(metric, self.n) + self.costs.overhead(metric, self.n)
            }
            Platform::Mobile => 0.0,
        }
    }

    fn exit_resource(&self, platform: Platform) -> f64 {
        match self.resource_metric {
            None | Some(ResourceMetric::CloudTime) => 0.0,
            Some(ResourceMetric::Latency) => self.exit_cost(Metric::Latency, platform),
            Some(ResourceMetric::Energy) => self.exit_cost(Metric::Energy, platform),
        }
    }

    fn populate_edges(&mut self) {
        let objective = self.objective;
        let mut edges = Vec::new();
        // Group node ids bucketed by span start and end for O(1) wiring.
        let mut starting_at: Vec<Vec<NodeId>> = vec![Vec::new(); self.n + 2];
        let mut ending_at: Vec<Vec<NodeId>> = vec![Vec::new(); self.n + 2];
        for node in &self.nodes {
            if let NodeRole::Group { span, .. } = node.role {
                starting_at[span.0].push(node.id);
                ending_at[span.1].push(node.id);
            }
        }

        for &to in &starting_at[1] {
            let (platform, span) = self.nodes[to].group().unwrap();
            edges.push(GraphEdge {
                from: self.source,
                to,
                cost: self.entry_cost(objective, None, platform, span),
                resource: self.entry_resource(None, platform, span),
                kind: EdgeKind::SourceEntry,
            });
        }
        for j in 1..self.n {
            for &from in &ending_at[j] {
                let (p_from, _) = self.nodes[from].group().unwrap();
                for &to in &starting_at[j + 1] {
                    let (p_to, span_to) = self.nodes[to].group().unwrap();
                    let kind = match (p_from, p_to) {
                        (Platform::Mobile, Platform::Mobile) => EdgeKind::Me,
                        (Platform::Cloud, Platform::Cloud) => EdgeKind::Ce,
                        (Platform::Mobile, Platform::Cloud) => EdgeKind::Eu,
                        (Platform::Cloud, Platform::Mobile) => EdgeKind::Ed,
                    };
                    edges.push(GraphEdge {
                        from,
                        to,
                        cost: self.entry_cost(objective, Some(p_from), p_to, span_to),
                        resource: self.entry_resource(Some(p_from), p_to, span_to),
                        kind,
                    });
                }
            }
        }
        for &from in &ending_at[self.n] {
            let (platform, _) = self.nodes[from].group().unwrap();
            edges.push(GraphEdge {
                from,
                to: self.sink,
                cost: self.exit_cost(objective, platform),
                resource: self.exit_resource(platform),
                kind: EdgeKind::SinkExit,
            });
        }
        self.edges = edges;
        self.rebuild_indices();
    }

    fn rebuild_indices(&mut self) {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (idx, e) in self.edges.iter().enumerate() {
            out[e.from].push(idx);
        }
        self.out = out;
        let mut topo: Vec<NodeId> = (0..self.nodes.len()).collect();
        topo.sort_by_key(|&id| self.nodes[id].span_end(self.n));
        self.topo = topo;
    }

    /// Splits the group nodes strictly inside the block into two chains that
    /// remember where the skip source ran, and charges the skip tensor's
    /// transfer on edges where the source and sink platforms differ.
    pub fn expand_residual(&self, block: &ResidualBlock) -> Result<ScheduleGraph> {
        if self.mode == Mode::Training {
            return Err(Error::UnsupportedTopology(
                "residual blocks are not expanded in training graphs".into(),
            ));
        }
        let (s, t) = (block.source_layer, block.sink_layer);
        if s < 1 || t > self.n || t < s + 2 {
            return Err(Error::Argument(format!(
                "residual block ({s},{t}) invalid for a {}-layer chain",
                self.n
            )));
        }
        for prev in &self.expanded {
            let overlap = s < prev.sink_layer && prev.source_layer < t;
            if overlap {
                return Err(Error::UnsupportedTopology(format!(
                    "residual blocks ({},{}) and ({s},{t}) overlap",
                    prev.source_layer, prev.sink_layer
                )));
            }
        }
        let block_index = self.expanded.len();

        let is_inside = |role: &NodeRole| -> bool {
            matches!(role, NodeRole::Group { span, .. } if span.0 > s && span.1 < t)
        };
        let covers = |role: &NodeRole, layer: usize| -> bool {
            matches!(role, NodeRole::Group { span, .. } if span.0 <= layer && layer <= span.1)
        };

        // Rebuild the node list; inside nodes become two tagged copies.
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut plain_map = vec![usize::MAX; self.nodes.len()];
        let mut copy_map: Vec<Option<(NodeId, NodeId)>> = vec![None; self.nodes.len()];
        for node in &self.nodes {
            if is_inside(&node.role) {
                let (platform, span, _) = match node.role {
                    NodeRole::Group {
                        platform,
                        span,
                        tag,
                    } => (platform, span, tag),
                    _ => unreachable!(),
                };
                let mut ids = (0, 0);
                for source_platform in [Platform::Mobile, Platform::Cloud] {
                    let id = nodes.len();
                    nodes.push(GraphNode {
                        id,
                        role: NodeRole::Group {
                            platform,
                            span,
                            tag: Some(ChainTag {
                                block: block_index,
                                source_platform,
                            }),
                        },
                    });
                    match source_platform {
                        Platform::Mobile => ids.0 = id,
                        Platform::Cloud => ids.1 = id,
                    }
                }
                copy_map[node.id] = Some(ids);
            } else {
                let id = nodes.len();
                plain_map[node.id] = id;
                nodes.push(GraphNode {
                    id,
                    role: node.role,
                });
            }
        }

        let skip = |metric: Metric, src: Platform, dst: Platform| -> f64 {
            match (src, dst) {
                (Platform::Mobile, Platform::Cloud) => {
                    self.costs.upload(metric, s) + self.costs.overhead(metric, s)
                }
                (Platform::Cloud, Platform::Mobile) => {
                    self.costs.download(metric, s) + self.costs.overhead(metric, s)
                }
                _ => 0.0,
            }
        };
        let skip_resource = |src: Platform, dst: Platform| -> f64 {
            match self.resource_metric {
                None | Some(ResourceMetric::CloudTime) => 0.0,
                Some(ResourceMetric::Latency) => skip(Metric::Latency, src, dst),
                Some(ResourceMetric::Energy) => skip(Metric::Energy, src, dst),
            }
        };

        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let u = &self.nodes[e.from];
            let v = &self.nodes[e.to];
            match (copy_map[e.from].as_ref(), copy_map[e.to].as_ref()) {
                (None, None) => {
                    let mut edge = *e;
                    edge.from = plain_map[e.from];
                    edge.to = plain_map[e.to];
                    // Direct hop from a node covering the source to a node
                    // covering the sink.
                    if covers(&u.role, s) && covers(&v.role, t) {
                        let (pu, _) = u.group().unwrap();
                        let (pv, _) = v.group().unwrap();
                        edge.cost += skip(self.objective, pu, pv);
                        edge.resource += skip_resource(pu, pv);
                    }
                    edges.push(edge);
                }
                (None, Some(&(v_mob, v_cld))) => {
                    // The predecessor covers the source layer; route into the
                    // chain that remembers its platform.
                    let (pu, _) = u.group().expect("source entry cannot reach inside nodes");
                    debug_assert!(covers(&u.role, s));
                    let to = match pu {
                        Platform::Mobile => v_mob,
                        Platform::Cloud => v_cld,
                    };
                    edges.push(GraphEdge {
                        from: plain_map[e.from],
                        to,
                        ..*e
                    });
                }
                (Some(&(u_mob, u_cld)), None) => {
                    // Leaving the block: the target covers the sink layer.
                    debug_assert!(covers(&v.role, t));
                    let (pv, _) = v.group().unwrap();
                    for (from, src) in [(u_mob, Platform::Mobile), (u_cld, Platform::Cloud)] {
                        edges.push(GraphEdge {
                            from,
                            to: plain_map[e.to],
                            cost: e.cost + skip(self.objective, src, pv),
                            resource: e.resource + skip_resource(src, pv),
                            kind: e.kind,
                        });
                    }
                }
                (Some(&(u_mob, u_cld)), Some(&(v_mob, v_cld))) => {
                    for (from, to) in [(u_mob, v_mob), (u_cld, v_cld)] {
                        edges.push(GraphEdge { from, to, ..*e });
                    }
                }
            }
        }

        let mut expanded = self.expanded.clone();
        expanded.push(*block);
        let mut graph = ScheduleGraph {
            mode: self.mode,
            objective: self.objective,
            resource_metric: self.resource_metric,
            nodes,
            edges,
            out: Vec::new(),
            topo: Vec::new(),
            source: plain_map[self.source],
            sink: plain_map[self.sink],
            n: self.n,
            costs: self.costs.clone(),
            expanded,
        };
        graph.rebuild_indices();
        Ok(graph)
    }

    /// Decodes a node path into maximal same-platform segments.
    pub fn decode_path(&self, path: &[NodeId]) -> Vec<Segment> {
        let mut segments: Vec<Segment> = Vec::new();
        for &id in path {
            if let Some((platform, span)) = self.nodes[id].group() {
                match segments.last_mut() {
                    Some(last) if last.platform == platform && last.end + 1 == span.0 => {
                        last.end = span.1;
                    }
                    _ => segments.push(Segment {
                        start: span.0,
                        end: span.1,
                        platform,
                    }),
                }
            }
        }
        segments
    }

    /// Text dump: a node table and `from to cost resource kind` edge lines.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "# nodes: {}", self.nodes.len()).unwrap();
        for node in &self.nodes {
            match node.role {
                NodeRole::Source => writeln!(out, "{} S", node.id).unwrap(),
                NodeRole::Sink => writeln!(out, "{} F", node.id).unwrap(),
                NodeRole::Group {
                    platform,
                    span,
                    tag,
                } => {
                    let tag = match tag {
                        Some(t) => format!(" tag=block{}:{}", t.block, t.source_platform.letter()),
                        None => String::new(),
                    };
                    writeln!(
                        out,
                        "{} {}[{}:{}]{}",
                        node.id,
                        platform.letter(),
                        span.0,
                        span.1,
                        tag
                    )
                    .unwrap();
                }
            }
        }
        writeln!(out, "# edges: {}", self.edges.len()).unwrap();
        for e in &self.edges {
            writeln!(
                out,
                "{} {} {} {} {}",
                e.from,
                e.to,
                e.cost,
                e.resource,
                e.kind.label()
            )
            .unwrap();
        }
        out
    }
}
