//! The problem instance: a profiled layer chain plus its environment.
//!
//! An instance is immutable once constructed. Loading validates every
//! invariant up front and precomputes the fallback-completed grouped
//! execution tables, so all downstream cost lookups are total functions.

pub mod document;
pub mod synth;

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::cost::CompressionConfig;
use crate::error::{Error, Result};
use crate::types::{Metric, Platform};

pub use document::{
    Document, ExplicitTransfers, LayerKind, LayerSpec, LinkProfile, ProfileEntry, Profiles,
    ResidualBlock, TransferEntry,
};

/// Grouped execution profile for one platform: cost of running layers
/// i..=j as one unit, for every profiled (i, j).
#[derive(Debug, Clone)]
pub struct GroupedProfile {
    pub platform: Platform,
    pub batch_size: u32,
    entries: BTreeMap<(usize, usize), ProfileEntry>,
}

impl GroupedProfile {
    pub fn entry(&self, i: usize, j: usize) -> Option<&ProfileEntry> {
        self.entries.get(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &ProfileEntry)> {
        self.entries.iter()
    }
}

/// Packed upper-triangular table over (i, j) with 1 <= i <= j <= n.
#[derive(Debug, Clone)]
pub(crate) struct TriTable {
    n: usize,
    values: Vec<f64>,
}

impl TriTable {
    pub fn new(n: usize, fill: f64) -> Self {
        TriTable {
            n,
            values: vec![fill; n * (n + 1) / 2],
        }
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(1 <= i && i <= j && j <= self.n);
        // rows 1..i hold (n - r + 1) entries each
        let skipped = (i - 1) * (self.n + 1) - i * (i - 1) / 2;
        skipped + (j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.offset(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.values[o] = v;
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Fallback-completed execution tables for both platforms.
#[derive(Debug, Clone)]
pub(crate) struct ExecTables {
    pub mobile_lat: TriTable,
    pub mobile_en: TriTable,
    pub cloud_lat: TriTable,
}

impl ExecTables {
    /// Builds the table from profiled entries. Entries missing from the
    /// profile are composed as the cheapest two-way split, recursively.
    ///
    /// A profiled grouped cost above one of its own sub-segmentations is
    /// measurement noise the scheduler must not take literally: execution
    /// can always be split, so the segment is priced at its cheapest
    /// realizable decomposition (with a warning). This clamp is what keeps
    /// the shortest-path reduction exact: a path through several
    /// same-platform nodes can never undercut the single merged node.
    fn complete(
        n: usize,
        profiled: &BTreeMap<(usize, usize), f64>,
        warnings: &mut Vec<String>,
        label: &str,
    ) -> TriTable {
        let mut table = TriTable::new(n, 0.0);
        let mut missing = 0usize;
        for k in 1..=n {
            table.set(k, k, profiled[&(k, k)]);
        }
        for len in 2..=n {
            for i in 1..=(n - len + 1) {
                let j = i + len - 1;
                let cheapest_split = (i..j)
                    .map(|k| table.get(i, k) + table.get(k + 1, j))
                    .fold(f64::INFINITY, f64::min);
                match profiled.get(&(i, j)) {
                    Some(&v) => {
                        if v > cheapest_split {
                            warnings.push(format!(
                                "{label} grouped cost ({i},{j})={v} exceeds its cheapest \
                                 sub-segmentation {cheapest_split}; pricing the segment \
                                 at the split"
                            ));
                        }
                        table.set(i, j, v.min(cheapest_split));
                    }
                    None => {
                        missing += 1;
                        table.set(i, j, cheapest_split);
                    }
                }
            }
        }
        if missing > 0 {
            warnings.push(format!(
                "{label} profile missing {missing} grouped entries; composed from \
                 cheapest sub-segmentation"
            ));
        }
        table
    }
}

/// Compression state carried by an instance after `apply_compression`.
#[derive(Debug, Clone)]
pub(crate) struct AppliedCompression {
    pub cfg: CompressionConfig,
}

/// A validated, immutable scheduling problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    doc: Document,
    n: usize,
    mobile: GroupedProfile,
    cloud: GroupedProfile,
    /// Profiles cover 1..=2N, i.e. the backward pass was measured directly.
    has_backward_profiles: bool,
    /// Tables sized N, or 2N when backward profiles exist.
    pub(crate) exec: ExecTables,
    pub(crate) batch: u32,
    pub(crate) compression: Option<AppliedCompression>,
    warnings: Vec<String>,
    hash: String,
}

impl ProblemInstance {
    /// Parses and validates a profile document from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(Document::from_json(text)?)
    }

    /// Validates a parsed document and builds the instance.
    pub fn from_document(doc: Document) -> Result<Self> {
        let mut failures = Vec::new();
        let mut warnings = Vec::new();

        let n = doc.layers.len();
        if n == 0 {
            return Err(Error::validation("layers: must not be empty"));
        }
        for (pos, layer) in doc.layers.iter().enumerate() {
            let want = pos + 1;
            if layer.index != want {
                failures.push(format!(
                    "layers[{pos}].index: expected {want}, got {}",
                    layer.index
                ));
            }
            if let Some(zr) = layer.zero_ratio {
                if !(0.0..=1.0).contains(&zr) {
                    failures.push(format!("layers[{pos}].zero_ratio: {zr} not in [0,1]"));
                }
            }
            if let Some(cr) = layer.compression_ratio {
                if !(cr >= 1.0) {
                    failures.push(format!("layers[{pos}].compression_ratio: {cr} < 1"));
                }
            }
            if pos >= 1 && layer.input_bytes != doc.layers[pos - 1].output_bytes {
                failures.push(format!(
                    "layers[{pos}].input_bytes: {} does not match previous layer's \
                     output_bytes {}",
                    layer.input_bytes,
                    doc.layers[pos - 1].output_bytes
                ));
            }
        }

        validate_link(&doc.link, &mut failures);
        validate_blocks(&doc.residual_blocks, n, &mut failures);

        if doc.mobile_idle_power_mw < 0.0 {
            failures.push(format!(
                "mobile_idle_power_mW: {} < 0",
                doc.mobile_idle_power_mw
            ));
        }
        if doc.batch_size == 0 {
            failures.push("batch_size: must be >= 1".into());
        }
        if let Some(t) = &doc.explicit_transfers {
            validate_transfers(t, n, &mut failures);
        }
        if let Some(o) = &doc.compression_overhead {
            if o.len() != n {
                failures.push(format!(
                    "compression_overhead: expected {n} per-layer entries, got {}",
                    o.len()
                ));
            }
        }

        let mobile = collect_profile(&doc.profiles.mobile, Platform::Mobile, n, &mut failures);
        let cloud = collect_profile(&doc.profiles.cloud, Platform::Cloud, n, &mut failures);

        if !failures.is_empty() {
            return Err(Error::Validation { failures });
        }
        let (mut mobile, mobile_backward) = mobile.expect("checked");
        let (mut cloud, cloud_backward) = cloud.expect("checked");
        mobile.batch_size = doc.batch_size;
        cloud.batch_size = doc.batch_size;
        if mobile_backward != cloud_backward {
            return Err(Error::validation(
                "profiles: mobile and cloud must both cover the backward pass, or neither",
            ));
        }
        let has_backward_profiles = mobile_backward;
        let span = if has_backward_profiles { 2 * n } else { n };

        let to_map = |p: &GroupedProfile, metric: Metric| -> BTreeMap<(usize, usize), f64> {
            p.entries
                .iter()
                .map(|(&k, e)| {
                    (
                        k,
                        match metric {
                            Metric::Latency => e.latency_ms,
                            Metric::Energy => e.energy_mj,
                        },
                    )
                })
                .collect()
        };
        let exec = ExecTables {
            mobile_lat: ExecTables::complete(
                span,
                &to_map(&mobile, Metric::Latency),
                &mut warnings,
                "mobile latency",
            ),
            mobile_en: ExecTables::complete(
                span,
                &to_map(&mobile, Metric::Energy),
                &mut warnings,
                "mobile energy",
            ),
            cloud_lat: ExecTables::complete(
                span,
                &to_map(&cloud, Metric::Latency),
                &mut warnings,
                "cloud latency",
            ),
        };

        let hash = hex::encode(Sha256::digest(doc.canonical_json().as_bytes()));

        Ok(ProblemInstance {
            doc,
            n,
            mobile,
            cloud,
            has_backward_profiles,
            exec,
            batch: 1,
            compression: None,
            warnings,
            hash,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.doc.layers
    }

    pub fn residual_blocks(&self) -> &[ResidualBlock] {
        &self.doc.residual_blocks
    }

    pub fn link(&self) -> &LinkProfile {
        &self.doc.link
    }

    pub fn mobile_profile(&self) -> &GroupedProfile {
        &self.mobile
    }

    pub fn cloud_profile(&self) -> &GroupedProfile {
        &self.cloud
    }

    pub fn mobile_idle_power_mw(&self) -> f64 {
        self.doc.mobile_idle_power_mw
    }

    pub fn explicit_transfers(&self) -> Option<&ExplicitTransfers> {
        self.doc.explicit_transfers.as_ref()
    }

    pub fn compression_overhead(&self) -> Option<&[TransferEntry]> {
        self.doc.compression_overhead.as_deref()
    }

    pub fn has_backward_profiles(&self) -> bool {
        self.has_backward_profiles
    }

    pub fn batch(&self) -> u32 {
        self.batch
    }

    pub fn compression_config(&self) -> Option<&CompressionConfig> {
        self.compression.as_ref().map(|c| &c.cfg)
    }

    /// Non-fatal observations collected while loading.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Hex SHA-256 of the canonical document serialization. Identifies the
    /// instance a lookup table was built against.
    pub fn content_hash(&self) -> &str {
        &self.hash
    }

    pub fn document(&self) -> &Document {
        &self.doc
    }

    /// Grouped cost of executing layers i..=j on one platform.
    ///
    /// Missing profile entries were composed at load time and anomalous
    /// ones clamped to their cheapest split, so this is total over the
    /// valid index range. Cloud energy is what the idle mobile device
    /// burns while waiting: `idle_power * cloud_latency`.
    pub fn segment_cost(
        &self,
        i: usize,
        j: usize,
        platform: Platform,
        metric: Metric,
    ) -> Result<f64> {
        if i < 1 || j < i || j > self.exec.mobile_lat.n() {
            return Err(Error::Argument(format!(
                "segment ({i},{j}) out of range 1..={}",
                self.exec.mobile_lat.n()
            )));
        }
        Ok(match (platform, metric) {
            (Platform::Mobile, Metric::Latency) => self.exec.mobile_lat.get(i, j),
            (Platform::Mobile, Metric::Energy) => self.exec.mobile_en.get(i, j),
            (Platform::Cloud, Metric::Latency) => self.exec.cloud_lat.get(i, j),
            (Platform::Cloud, Metric::Energy) => {
                self.doc.mobile_idle_power_mw * self.exec.cloud_lat.get(i, j) / 1000.0
            }
        })
    }

    /// Returns a copy whose transfer byte counts are multiplied by `batch`.
    /// Execution profiles are left as profiled; they do not extrapolate.
    pub fn with_batch(&self, batch: u32) -> Result<ProblemInstance> {
        if batch == 0 {
            return Err(Error::Argument("batch must be >= 1".into()));
        }
        let mut out = self.clone();
        out.batch = batch;
        Ok(out)
    }

    /// Returns a copy that moves compressed tensors across the link and
    /// charges the per-layer compression overhead on every cross-platform
    /// transition. The original instance is untouched.
    pub fn apply_compression(&self, cfg: &CompressionConfig) -> Result<ProblemInstance> {
        cfg.validate()?;
        let mut out = self.clone();
        out.compression = if cfg.enabled {
            Some(AppliedCompression { cfg: cfg.clone() })
        } else {
            None
        };
        Ok(out)
    }
}

fn validate_link(link: &LinkProfile, failures: &mut Vec<String>) {
    if !link.offline {
        if !(link.uplink_mbps > 0.0) {
            failures.push(format!(
                "link.uplink_mbps: {} must be > 0 unless the link is offline",
                link.uplink_mbps
            ));
        }
        if !(link.downlink_mbps > 0.0) {
            failures.push(format!(
                "link.downlink_mbps: {} must be > 0 unless the link is offline",
                link.downlink_mbps
            ));
        }
    }
    if link.rtt_ms < 0.0 {
        failures.push(format!("link.rtt_ms: {} < 0", link.rtt_ms));
    }
    for (name, v) in [
        ("alpha_u", link.alpha_u),
        ("alpha_d", link.alpha_d),
        ("beta", link.beta),
    ] {
        if !v.is_finite() || v < 0.0 {
            failures.push(format!("link.{name}: {v} must be finite and >= 0"));
        }
    }
}

fn validate_blocks(blocks: &[ResidualBlock], n: usize, failures: &mut Vec<String>) {
    let mut sorted: Vec<&ResidualBlock> = blocks.iter().collect();
    sorted.sort_by_key(|b| b.source_layer);
    for (pos, b) in sorted.iter().enumerate() {
        if b.source_layer < 1 || b.sink_layer > n {
            failures.push(format!(
                "residual_blocks[{pos}]: span ({},{}) out of range 1..={n}",
                b.source_layer, b.sink_layer
            ));
            continue;
        }
        if b.sink_layer < b.source_layer + 2 {
            failures.push(format!(
                "residual_blocks[{pos}]: sink_layer must be at least source_layer + 2 \
                 (got {} and {})",
                b.source_layer, b.sink_layer
            ));
        }
        if b.block_size != b.sink_layer - b.source_layer + 1 {
            failures.push(format!(
                "residual_blocks[{pos}]: block_size {} does not match span ({},{})",
                b.block_size, b.source_layer, b.sink_layer
            ));
        }
        if pos >= 1 && sorted[pos - 1].sink_layer > b.source_layer {
            failures.push(format!(
                "residual_blocks: blocks ({},{}) and ({},{}) overlap",
                sorted[pos - 1].source_layer,
                sorted[pos - 1].sink_layer,
                b.source_layer,
                b.sink_layer
            ));
        }
    }
}

fn validate_transfers(t: &ExplicitTransfers, n: usize, failures: &mut Vec<String>) {
    let mut check = |name: String, e: &TransferEntry| {
        if !e.latency_ms.is_finite() || e.latency_ms < 0.0 {
            failures.push(format!("{name}.latency_ms: {} invalid", e.latency_ms));
        }
        if !e.energy_mj.is_finite() || e.energy_mj < 0.0 {
            failures.push(format!("{name}.energy_mJ: {} invalid", e.energy_mj));
        }
    };
    check("explicit_transfers.upload_input".into(), &t.upload_input);
    if let Some(d) = &t.download_input {
        check("explicit_transfers.download_input".into(), d);
    }
    for (k, e) in t.upload.iter().enumerate() {
        check(format!("explicit_transfers.upload[{k}]"), e);
    }
    for (k, e) in t.download.iter().enumerate() {
        check(format!("explicit_transfers.download[{k}]"), e);
    }
    if t.upload.len() > n {
        failures.push(format!(
            "explicit_transfers.upload: {} entries for {n} layers",
            t.upload.len()
        ));
    }
    if t.download.len() > n {
        failures.push(format!(
            "explicit_transfers.download: {} entries for {n} layers",
            t.download.len()
        ));
    }
}

/// Collects raw profile entries into a map, checking ranges and duplicates.
/// Returns the profile and whether it covers the mirrored backward chain.
fn collect_profile(
    entries: &[ProfileEntry],
    platform: Platform,
    n: usize,
    failures: &mut Vec<String>,
) -> Option<(GroupedProfile, bool)> {
    let label = match platform {
        Platform::Mobile => "profiles.mobile",
        Platform::Cloud => "profiles.cloud",
    };
    let mut map = BTreeMap::new();
    let mut ok = true;
    let mut max_j = 0usize;
    for (pos, e) in entries.iter().enumerate() {
        if e.i < 1 || e.j < e.i || e.j > 2 * n {
            failures.push(format!(
                "{label}[{pos}]: entry ({},{}) out of range 1..={}",
                e.i,
                e.j,
                2 * n
            ));
            ok = false;
            continue;
        }
        for (metric, v) in [("latency_ms", e.latency_ms), ("energy_mJ", e.energy_mj)] {
            if !v.is_finite() || v < 0.0 {
                failures.push(format!("{label}[{pos}].{metric}: {v} must be >= 0"));
                ok = false;
            }
        }
        if map.insert((e.i, e.j), *e).is_some() {
            failures.push(format!("{label}: duplicate entry ({},{})", e.i, e.j));
            ok = false;
        }
        max_j = max_j.max(e.j);
    }
    let has_backward = max_j > n;
    let span = if has_backward { 2 * n } else { n };
    for k in 1..=span {
        if !map.contains_key(&(k, k)) {
            failures.push(format!(
                "{label}: missing single-layer entry ({k},{k}); singletons are required"
            ));
            ok = false;
        }
    }
    if !ok {
        return None;
    }
    Some((
        GroupedProfile {
            platform,
            batch_size: 1,
            entries: map,
        },
        has_backward,
    ))
}
