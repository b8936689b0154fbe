//! Link power/latency model and the compression adjustment.
//!
//! Units are fixed crate-wide: milliseconds, millijoules, bytes,
//! megabits/second, milliwatts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::document::{LayerKind, LayerSpec, LinkProfile};
use crate::types::{Direction, UNREACHABLE};

/// Cost of moving one tensor across the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferCost {
    pub latency_ms: f64,
    #[serde(rename = "energy_mJ")]
    pub energy_mj: f64,
    pub bytes_on_wire: u64,
}

impl TransferCost {
    pub const ZERO: TransferCost = TransferCost {
        latency_ms: 0.0,
        energy_mj: 0.0,
        bytes_on_wire: 0,
    };
}

/// Radio power draw for the given direction, `alpha * rate + beta` mW.
pub fn link_power(link: &LinkProfile, direction: Direction) -> Result<f64> {
    if link.offline {
        return Err(Error::UnavailableLink(link.name.clone()));
    }
    Ok(match direction {
        Direction::Up => link.alpha_u * link.uplink_mbps + link.beta,
        Direction::Down => link.alpha_d * link.downlink_mbps + link.beta,
    })
}

/// Latency and mobile energy of pushing `bytes` through the link.
///
/// An offline link with a non-zero payload yields the unreachable sentinel
/// rather than an error, so graph builders can keep the cloud routes in
/// place and let the solver avoid them.
pub fn transfer_cost(link: &LinkProfile, bytes: u64, direction: Direction) -> TransferCost {
    if bytes == 0 && link.rtt_ms == 0.0 {
        return TransferCost::ZERO;
    }
    if link.offline {
        return TransferCost {
            latency_ms: UNREACHABLE,
            energy_mj: UNREACHABLE,
            bytes_on_wire: bytes,
        };
    }
    let rate_mbps = match direction {
        Direction::Up => link.uplink_mbps,
        Direction::Down => link.downlink_mbps,
    };
    let latency_ms = link.rtt_ms + 8.0 * bytes as f64 / (rate_mbps * 1000.0);
    let power_mw = link_power(link, direction).expect("checked offline above");
    TransferCost {
        latency_ms,
        energy_mj: power_mw * latency_ms / 1000.0,
        bytes_on_wire: bytes,
    }
}

/// How layer outputs are shrunk before hitting the wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressionConfig {
    pub enabled: bool,
    /// Fixed-point width the 32-bit activations are quantized to.
    pub quantize_bits: u32,
    /// Compression ratio used for layers that do not carry their own.
    pub default_ratio: f64,
    /// Layer kinds that are never compressed.
    pub skip_kinds: BTreeSet<LayerKind>,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            enabled: true,
            quantize_bits: 8,
            default_ratio: 1.0,
            skip_kinds: [LayerKind::Fc].into_iter().collect(),
        }
    }
}

impl CompressionConfig {
    pub fn disabled() -> Self {
        CompressionConfig {
            enabled: false,
            ..CompressionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut failures = Vec::new();
        if !matches!(self.quantize_bits, 4 | 8 | 16 | 32) {
            failures.push(format!(
                "quantize_bits must be one of 4, 8, 16, 32 (got {})",
                self.quantize_bits
            ));
        }
        if !(self.default_ratio >= 1.0) {
            failures.push(format!(
                "default_ratio must be >= 1 (got {})",
                self.default_ratio
            ));
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { failures })
        }
    }

    fn applies_to(&self, layer: &LayerSpec) -> bool {
        self.enabled && layer.compressible && !self.skip_kinds.contains(&layer.kind)
    }

    /// Ratio of post-compression wire bytes to raw bytes for this layer.
    pub fn wire_ratio(&self, layer: &LayerSpec) -> f64 {
        if !self.applies_to(layer) {
            return 1.0;
        }
        let cr = layer.compression_ratio.unwrap_or(self.default_ratio);
        (self.quantize_bits as f64 / 32.0) / cr
    }
}

/// Wire size of a layer's output tensor under the given config.
///
/// Quantizes the 32-bit tensor to `quantize_bits`, then divides by the
/// layer's compression ratio, rounding the byte count up.
pub fn effective_transfer_bytes(layer: &LayerSpec, cfg: &CompressionConfig) -> u64 {
    if !cfg.applies_to(layer) {
        return layer.output_bytes;
    }
    let cr = layer.compression_ratio.unwrap_or(cfg.default_ratio);
    let quantized = layer.output_bytes as f64 * cfg.quantize_bits as f64 / 32.0;
    (quantized / cr).ceil() as u64
}

/// Optional affine CR estimate from a profiled zero ratio. Never applied
/// implicitly; callers opt in with their own fitted (a, b).
pub fn estimate_compression_ratio(zero_ratio: f64, a: f64, b: f64) -> f64 {
    (a * zero_ratio + b).max(1.0)
}
