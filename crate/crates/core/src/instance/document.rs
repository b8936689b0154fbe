//! On-disk profile document schema.
//!
//! This is the exchange format: a JSON object with `layers`, `residual_blocks`,
//! `profiles.mobile` / `profiles.cloud`, `link`, and optional
//! `explicit_transfers`, `mobile_idle_power_mW`, `compression_overhead`,
//! `batch_size`. All numbers are plain decimals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Fc,
    Pool,
    Relu,
    Lrn,
    Drop,
    Deconv,
    Lstm,
    Soft,
    Other,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerSpec {
    /// 1-based position in the chain.
    pub index: usize,
    pub name: String,
    pub kind: LayerKind,
    /// Input tensor size in bytes (32-bit representation).
    pub input_bytes: u64,
    /// Output tensor size in bytes (32-bit representation).
    pub output_bytes: u64,
    /// Parameter bytes; 0 for parameter-free layers.
    #[serde(default)]
    pub weight_bytes: u64,
    #[serde(default)]
    pub compressible: bool,
    /// Fraction of zero-valued outputs, if profiled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_ratio: Option<f64>,
    /// Lossless compression ratio of the quantized output, if profiled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compression_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualBlock {
    /// Layer whose output skips ahead.
    pub source_layer: usize,
    /// Layer where the skip connection re-enters.
    pub sink_layer: usize,
    /// Number of layers spanned, source and sink inclusive.
    pub block_size: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub i: usize,
    pub j: usize,
    pub latency_ms: f64,
    #[serde(rename = "energy_mJ")]
    pub energy_mj: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profiles {
    pub mobile: Vec<ProfileEntry>,
    pub cloud: Vec<ProfileEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkProfile {
    /// "3G", "4G", "WiFi", or free text for custom links.
    pub name: String,
    pub uplink_mbps: f64,
    pub downlink_mbps: f64,
    /// Uplink power slope, mW per Mbps.
    pub alpha_u: f64,
    /// Downlink power slope, mW per Mbps.
    pub alpha_d: f64,
    /// Power intercept, mW.
    pub beta: f64,
    /// Fixed per-transfer latency overhead, ms.
    #[serde(default)]
    pub rtt_ms: f64,
    /// When set, the link carries no traffic and cloud routes are unreachable.
    #[serde(default)]
    pub offline: bool,
}

impl LinkProfile {
    /// Measured U.S. network averages for the named technology.
    pub fn preset(name: &str) -> Option<LinkProfile> {
        let (up, down, au, ad, beta) = match name {
            "3G" => (1.1, 2.0275, 868.98, 122.12, 817.88),
            "4G" => (5.85, 13.76, 438.39, 51.97, 1288.04),
            "WiFi" => (18.88, 54.97, 283.17, 137.01, 132.86),
            _ => return None,
        };
        Some(LinkProfile {
            name: name.to_string(),
            uplink_mbps: up,
            downlink_mbps: down,
            alpha_u: au,
            alpha_d: ad,
            beta,
            rtt_ms: 0.0,
            offline: false,
        })
    }
}

/// One measured transfer: how long it takes and what it costs the battery.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransferEntry {
    pub latency_ms: f64,
    #[serde(rename = "energy_mJ")]
    pub energy_mj: f64,
}

/// Directly measured transfer costs, bypassing the link model.
/// `upload[k-1]` / `download[k-1]` cover layer k's output tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplicitTransfers {
    pub upload_input: TransferEntry,
    #[serde(default)]
    pub upload: Vec<TransferEntry>,
    #[serde(default)]
    pub download: Vec<TransferEntry>,
    /// Download of the network-input-sized tensor; only training schedules
    /// that finish on the cloud need it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub download_input: Option<TransferEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub residual_blocks: Vec<ResidualBlock>,
    pub profiles: Profiles,
    pub link: LinkProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_transfers: Option<ExplicitTransfers>,
    #[serde(default, rename = "mobile_idle_power_mW")]
    pub mobile_idle_power_mw: f64,
    /// Per-layer compress/decompress cost, charged on cross-platform
    /// transitions when compression is applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compression_overhead: Option<Vec<TransferEntry>>,
    /// Batch size the profiles were measured at.
    #[serde(default = "default_batch", skip_serializing_if = "is_default_batch")]
    pub batch_size: u32,
}

fn default_batch() -> u32 {
    1
}

fn is_default_batch(b: &u32) -> bool {
    *b == 1
}

impl Document {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Parse(format!("profile document at {}: {}", e.path(), e.inner())))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Canonical serialization used for content hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("document serializes")
    }
}
