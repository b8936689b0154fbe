//! Schedules: the solver's output, and the arithmetic that re-prices one
//! from first principles.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::chain::ChainCosts;
use crate::error::{Error, Result};
use crate::instance::ResidualBlock;
use crate::types::{Metric, Mode, Platform, ResourceMetric};

/// A maximal run of consecutive layers on one platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub platform: Platform,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Where the objective value comes from, in the objective's unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CostBreakdown {
    pub computation: f64,
    pub upload: f64,
    pub download: f64,
    pub weight_download: f64,
    pub compression_overhead: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.computation
            + self.upload
            + self.download
            + self.weight_download
            + self.compression_overhead
    }
}

/// An ordered platform assignment covering every layer exactly once.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: Mode,
    pub objective: Metric,
    pub segments: Vec<Segment>,
    pub total_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub total_resource: Option<f64>,
    pub breakdown: CostBreakdown,
}

impl Schedule {
    /// Run-length pattern string, e.g. "M→C→M".
    pub fn pattern(&self) -> String {
        let letters: Vec<String> = self
            .segments
            .iter()
            .map(|s| s.platform.letter().to_string())
            .collect();
        letters.join("→")
    }

    pub fn transitions(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    pub fn mobile_layers(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.platform == Platform::Mobile)
            .map(Segment::len)
            .sum()
    }

    /// Checks the segments tile 1..=n as maximal runs.
    pub fn validate_tiling(&self, n: usize) -> Result<()> {
        let mut failures = Vec::new();
        if self.segments.is_empty() {
            failures.push("schedule has no segments".to_string());
        } else {
            if self.segments[0].start != 1 {
                failures.push(format!(
                    "first segment starts at {} instead of 1",
                    self.segments[0].start
                ));
            }
            if self.segments.last().unwrap().end != n {
                failures.push(format!(
                    "last segment ends at {} instead of {n}",
                    self.segments.last().unwrap().end
                ));
            }
            for w in self.segments.windows(2) {
                if w[1].start != w[0].end + 1 {
                    failures.push(format!(
                        "segments ({},{}) and ({},{}) are not contiguous",
                        w[0].start, w[0].end, w[1].start, w[1].end
                    ));
                }
                if w[1].platform == w[0].platform {
                    failures.push(format!(
                        "adjacent segments ending {} share a platform; runs must be maximal",
                        w[1].end
                    ));
                }
            }
            for s in &self.segments {
                if s.start < 1 || s.end < s.start || s.end > n {
                    failures.push(format!("segment ({},{}) out of range", s.start, s.end));
                }
            }
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { failures })
        }
    }
}

/// Collapses a per-layer platform assignment into maximal runs.
pub(crate) fn segments_from_assignment(assignment: &[Platform]) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut start = 0usize;
    for k in 0..assignment.len() {
        if k + 1 == assignment.len() || assignment[k + 1] != assignment[k] {
            segments.push(Segment {
                start: start + 1,
                end: k + 1,
                platform: assignment[k],
            });
            start = k + 1;
        }
    }
    segments
}

fn platform_of(segments: &[Segment], layer: usize) -> Platform {
    segments
        .iter()
        .find(|s| s.start <= layer && layer <= s.end)
        .map(|s| s.platform)
        .expect("layer covered by tiling")
}

/// Prices a segment list from the cost tables alone: grouped execution,
/// boundary transfers, skip-connection transfers, weight downloads.
/// This is the single re-pricing routine everything cross-checks against.
pub(crate) fn breakdown_for(
    costs: &ChainCosts,
    metric: Metric,
    segments: &[Segment],
    blocks: &[ResidualBlock],
) -> CostBreakdown {
    let mut b = CostBreakdown::default();
    for s in segments {
        b.computation += costs.exec(s.platform, metric, s.start, s.end);
        if s.platform == Platform::Cloud {
            b.weight_download += costs.weight_download(metric, s.start, s.end);
        }
    }
    if segments[0].platform == Platform::Cloud {
        b.upload += costs.upload(metric, 0);
        b.compression_overhead += costs.overhead(metric, 0);
    }
    for w in segments.windows(2) {
        let boundary = w[0].end;
        match (w[0].platform, w[1].platform) {
            (Platform::Mobile, Platform::Cloud) => {
                b.upload += costs.upload(metric, boundary);
                b.compression_overhead += costs.overhead(metric, boundary);
            }
            (Platform::Cloud, Platform::Mobile) => {
                b.download += costs.download(metric, boundary);
                b.compression_overhead += costs.overhead(metric, boundary);
            }
            _ => {}
        }
    }
    if segments.last().unwrap().platform == Platform::Cloud {
        b.download += costs.download(metric, costs.n);
        b.compression_overhead += costs.overhead(metric, costs.n);
    }
    for block in blocks {
        let src = platform_of(segments, block.source_layer);
        let snk = platform_of(segments, block.sink_layer);
        match (src, snk) {
            (Platform::Mobile, Platform::Cloud) => {
                b.upload += costs.upload(metric, block.source_layer);
                b.compression_overhead += costs.overhead(metric, block.source_layer);
            }
            (Platform::Cloud, Platform::Mobile) => {
                b.download += costs.download(metric, block.source_layer);
                b.compression_overhead += costs.overhead(metric, block.source_layer);
            }
            _ => {}
        }
    }
    b
}

/// Total under a resource metric; cloud_time counts execution only.
pub(crate) fn resource_for(
    costs: &ChainCosts,
    rm: ResourceMetric,
    segments: &[Segment],
    blocks: &[ResidualBlock],
) -> f64 {
    match rm {
        ResourceMetric::Latency => breakdown_for(costs, Metric::Latency, segments, blocks).total(),
        ResourceMetric::Energy => breakdown_for(costs, Metric::Energy, segments, blocks).total(),
        ResourceMetric::CloudTime => segments
            .iter()
            .filter(|s| s.platform == Platform::Cloud)
            .map(|s| costs.cloud_exec_latency(s.start, s.end))
            .sum(),
    }
}

/// Deterministic preference among equal-cost schedules: fewer platform
/// transitions, then more layers on mobile, then the lexicographically
/// smallest segment list (mobile ordered before cloud).
pub(crate) fn cmp_candidates(
    cost_a: f64,
    segs_a: &[Segment],
    cost_b: f64,
    segs_b: &[Segment],
) -> Ordering {
    match cost_a.partial_cmp(&cost_b) {
        Some(Ordering::Equal) | None => {}
        Some(o) => return o,
    }
    match segs_a.len().cmp(&segs_b.len()) {
        Ordering::Equal => {}
        o => return o,
    }
    let mob = |segs: &[Segment]| -> usize {
        segs.iter()
            .filter(|s| s.platform == Platform::Mobile)
            .map(Segment::len)
            .sum()
    };
    match mob(segs_b).cmp(&mob(segs_a)) {
        Ordering::Equal => {}
        o => return o,
    }
    segs_a.cmp(segs_b)
}
