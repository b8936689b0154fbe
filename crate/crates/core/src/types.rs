//! Small shared vocabulary types.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Where a group of layers executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Mobile,
    Cloud,
}

impl Platform {
    pub fn letter(self) -> char {
        match self {
            Platform::Mobile => 'M',
            Platform::Cloud => 'C',
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Platform::Mobile => write!(f, "mobile"),
            Platform::Cloud => write!(f, "cloud"),
        }
    }
}

/// Objective metric a graph or schedule is costed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Latency,
    Energy,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Latency => write!(f, "latency"),
            Metric::Energy => write!(f, "energy"),
        }
    }
}

/// Secondary metric accumulated along edges for constrained solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceMetric {
    Latency,
    Energy,
    /// Cloud execution time only: what the cloud-load scenario bounds.
    CloudTime,
}

impl fmt::Display for ResourceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceMetric::Latency => write!(f, "latency"),
            ResourceMetric::Energy => write!(f, "energy"),
            ResourceMetric::CloudTime => write!(f, "cloud_time"),
        }
    }
}

/// Whether the chain being scheduled is a forward pass or a
/// forward+backward pass over mirrored layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Inference,
    Training,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Inference => write!(f, "inference"),
            Mode::Training => write!(f, "training"),
        }
    }
}

/// Transfer direction over the mobile link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

/// Reserved weight meaning "this edge cannot be taken". All solvers treat
/// it as unreachable; it propagates through sums without overflow.
pub const UNREACHABLE: f64 = f64::INFINITY;
