//! Per-chain cost tables: everything a solve needs, resolved up front.
//!
//! A `ChainCosts` flattens one scheduling chain (the N inference layers, or
//! the 2N forward+backward layers for training) into total lookup functions:
//! grouped execution cost, boundary transfer cost, compression overhead and
//! weight-download cost. The graph builder, the brute-force oracle, the ILP
//! exporter and the schedule evaluator all read from this one view, so their
//! numbers can only differ by how they search, never by how they price.

use crate::cost::{effective_transfer_bytes, link_power};
use crate::error::{Error, Result};
use crate::instance::{LayerSpec, LinkProfile, ProblemInstance, TransferEntry, TriTable};
use crate::types::{Direction, Metric, Mode, Platform, UNREACHABLE};

/// How backward-pass costs are obtained when the profile stops at layer N.
#[derive(Debug, Clone, Copy)]
pub enum MirrorPolicy {
    /// Backward layer b inherits forward layer 2N+1-b scaled by this factor.
    Synthesize { backward_factor: f64 },
    /// Fail unless the document profiled layers 1..=2N directly.
    RequireProfiles,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingOptions {
    /// Fraction of weights refreshed in the cloud per step; scales the
    /// weight-download bytes.
    pub update_fraction: f64,
    pub mirror: MirrorPolicy,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        TrainingOptions {
            update_fraction: 0.0,
            mirror: MirrorPolicy::Synthesize {
                backward_factor: 2.0,
            },
        }
    }
}

impl TrainingOptions {
    pub fn with_update_fraction(rho: f64) -> Self {
        TrainingOptions {
            update_fraction: rho,
            ..TrainingOptions::default()
        }
    }
}

/// Resolved cost tables for one chain. Immutable and cheap to share.
#[derive(Debug, Clone)]
pub struct ChainCosts {
    pub mode: Mode,
    /// Chain length: N for inference, 2N for training.
    pub n: usize,
    /// The underlying layer count N.
    pub base_n: usize,
    exec_mobile_lat: TriTable,
    exec_mobile_en: TriTable,
    exec_cloud_lat: TriTable,
    idle_power_mw: f64,
    // Boundary b in 0..=n: the tensor crossing the link when execution
    // switches platform after layer b (b = 0 is the network input).
    up_lat: Vec<f64>,
    up_en: Vec<f64>,
    dn_lat: Vec<f64>,
    dn_en: Vec<f64>,
    // One compress-or-decompress operation at this boundary; zero when
    // compression is off or does not apply to the tensor's layer.
    ovh_lat: Vec<f64>,
    ovh_en: Vec<f64>,
    /// Prefix sums of rho-scaled weight bytes per chain layer; only the
    /// backward half contributes, and only in training mode.
    weight_prefix: Vec<f64>,
    update_fraction: f64,
    link: LinkProfile,
    warnings: Vec<String>,
}

impl ChainCosts {
    pub fn inference(inst: &ProblemInstance) -> Result<ChainCosts> {
        Self::build(inst, Mode::Inference, &TrainingOptions::default())
    }

    pub fn training(inst: &ProblemInstance, opts: &TrainingOptions) -> Result<ChainCosts> {
        Self::build(inst, Mode::Training, opts)
    }

    fn build(inst: &ProblemInstance, mode: Mode, opts: &TrainingOptions) -> Result<ChainCosts> {
        let base_n = inst.layer_count();
        let n = match mode {
            Mode::Inference => base_n,
            Mode::Training => 2 * base_n,
        };
        if matches!(mode, Mode::Training) {
            if !(0.0..=1.0).contains(&opts.update_fraction) {
                return Err(Error::Argument(format!(
                    "update_fraction {} not in [0,1]",
                    opts.update_fraction
                )));
            }
            if !inst.has_backward_profiles() && matches!(opts.mirror, MirrorPolicy::RequireProfiles)
            {
                return Err(Error::validation(
                    "training requires grouped profiles over layers 1..=2N, and the \
                     mirror-synthesis policy is disabled",
                ));
            }
        }

        let mut warnings = Vec::new();
        let exec = build_exec_tables(inst, mode, opts, n, base_n)?;
        let cfg = inst.compression_config();
        let batch = inst.batch() as f64;

        // Tensor crossing boundary b: layer b's output for b <= N, the
        // mirrored activation gradient (same size as layer 2N-b's output)
        // for b > N, and the network input for b = 0.
        let tensor_of = |b: usize| -> usize {
            if b > base_n {
                2 * base_n - b
            } else {
                b
            }
        };
        let tensor_layer = |t: usize| -> LayerSpec {
            if t == 0 {
                // The raw input compresses like the first layer's data.
                let mut pseudo = inst.layers()[0].clone();
                pseudo.output_bytes = pseudo.input_bytes;
                pseudo
            } else {
                inst.layers()[t - 1].clone()
            }
        };
        let wire_ratio = |t: usize| -> f64 {
            match cfg {
                Some(c) => c.wire_ratio(&tensor_layer(t)),
                None => 1.0,
            }
        };

        let mut up_lat = vec![0.0; n + 1];
        let mut up_en = vec![0.0; n + 1];
        let mut dn_lat = vec![0.0; n + 1];
        let mut dn_en = vec![0.0; n + 1];
        let mut ovh_lat = vec![0.0; n + 1];
        let mut ovh_en = vec![0.0; n + 1];

        // Boundaries a schedule can actually cross. up[n] and dn[0] only
        // exist in the training chain.
        let up_needed = |b: usize| b < n;
        let dn_needed = |b: usize| b > 0 || matches!(mode, Mode::Training);

        for b in 0..=n {
            let t = tensor_of(b);
            if let Some(c) = cfg {
                if c.wire_ratio(&tensor_layer(t)) < 1.0 && t >= 1 {
                    if let Some(table) = inst.compression_overhead() {
                        let e = table[t - 1];
                        ovh_lat[b] = e.latency_ms;
                        ovh_en[b] = e.energy_mj;
                    }
                }
            }
            match inst.explicit_transfers() {
                Some(expl) => {
                    let scale = batch * wire_ratio(t);
                    if up_needed(b) {
                        let e = resolve_explicit(expl, t, Direction::Up, &mut warnings)?;
                        up_lat[b] = e.latency_ms * scale;
                        up_en[b] = e.energy_mj * scale;
                    }
                    if dn_needed(b) {
                        let e = resolve_explicit(expl, t, Direction::Down, &mut warnings)?;
                        dn_lat[b] = e.latency_ms * scale;
                        dn_en[b] = e.energy_mj * scale;
                    }
                }
                None => {
                    let layer = tensor_layer(t);
                    let per_sample = match cfg {
                        Some(c) => effective_transfer_bytes(&layer, c) as f64,
                        None => layer.output_bytes as f64,
                    };
                    let bytes = per_sample * batch;
                    if up_needed(b) {
                        let c = fractional_transfer(inst.link(), bytes, Direction::Up);
                        up_lat[b] = c.0;
                        up_en[b] = c.1;
                    }
                    if dn_needed(b) {
                        let c = fractional_transfer(inst.link(), bytes, Direction::Down);
                        dn_lat[b] = c.0;
                        dn_en[b] = c.1;
                    }
                }
            }
        }

        // Weight bytes per chain layer; only the backward half updates weights.
        let mut weight_prefix = vec![0.0; n + 1];
        for b in 1..=n {
            let bytes = if matches!(mode, Mode::Training) && b > base_n {
                let forward = 2 * base_n + 1 - b;
                inst.layers()[forward - 1].weight_bytes as f64
            } else {
                0.0
            };
            weight_prefix[b] = weight_prefix[b - 1] + opts.update_fraction * bytes;
        }

        Ok(ChainCosts {
            mode,
            n,
            base_n,
            exec_mobile_lat: exec.0,
            exec_mobile_en: exec.1,
            exec_cloud_lat: exec.2,
            idle_power_mw: inst.mobile_idle_power_mw(),
            up_lat,
            up_en,
            dn_lat,
            dn_en,
            ovh_lat,
            ovh_en,
            weight_prefix,
            update_fraction: opts.update_fraction,
            link: inst.link().clone(),
            warnings,
        })
    }

    pub fn update_fraction(&self) -> f64 {
        self.update_fraction
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Grouped execution cost of chain layers i..=j.
    pub fn exec(&self, platform: Platform, metric: Metric, i: usize, j: usize) -> f64 {
        match (platform, metric) {
            (Platform::Mobile, Metric::Latency) => self.exec_mobile_lat.get(i, j),
            (Platform::Mobile, Metric::Energy) => self.exec_mobile_en.get(i, j),
            (Platform::Cloud, Metric::Latency) => self.exec_cloud_lat.get(i, j),
            (Platform::Cloud, Metric::Energy) => {
                self.idle_power_mw * self.exec_cloud_lat.get(i, j) / 1000.0
            }
        }
    }

    /// Cloud execution latency alone; what the cloud-load constraint meters.
    pub fn cloud_exec_latency(&self, i: usize, j: usize) -> f64 {
        self.exec_cloud_lat.get(i, j)
    }

    /// Transfer cost of the tensor at boundary b, excluding overhead.
    pub fn upload(&self, metric: Metric, b: usize) -> f64 {
        match metric {
            Metric::Latency => self.up_lat[b],
            Metric::Energy => self.up_en[b],
        }
    }

    pub fn download(&self, metric: Metric, b: usize) -> f64 {
        match metric {
            Metric::Latency => self.dn_lat[b],
            Metric::Energy => self.dn_en[b],
        }
    }

    /// Compression overhead charged per cross-platform transfer at boundary
    /// b. Latency pays compress on the sender plus decompress on the
    /// receiver; energy pays only the mobile end's half.
    pub fn overhead(&self, metric: Metric, b: usize) -> f64 {
        match metric {
            Metric::Latency => 2.0 * self.ovh_lat[b],
            Metric::Energy => self.ovh_en[b],
        }
    }

    /// rho-scaled weight bytes a cloud segment i..=j must send down.
    pub fn weight_download_bytes(&self, i: usize, j: usize) -> f64 {
        self.weight_prefix[j] - self.weight_prefix[i - 1]
    }

    /// Weight-download cost for a cloud segment, one transfer per segment.
    pub fn weight_download(&self, metric: Metric, i: usize, j: usize) -> f64 {
        let bytes = self.weight_download_bytes(i, j);
        if bytes == 0.0 {
            return 0.0;
        }
        let (lat, en) = fractional_transfer(&self.link, bytes, Direction::Down);
        match metric {
            Metric::Latency => lat,
            Metric::Energy => en,
        }
    }
}

/// Like `cost::transfer_cost` but for fractional byte totals (rho-scaled
/// weights). Returns (latency_ms, energy_mJ).
fn fractional_transfer(link: &LinkProfile, bytes: f64, direction: Direction) -> (f64, f64) {
    if bytes == 0.0 && link.rtt_ms == 0.0 {
        return (0.0, 0.0);
    }
    if link.offline {
        return (UNREACHABLE, UNREACHABLE);
    }
    let rate = match direction {
        Direction::Up => link.uplink_mbps,
        Direction::Down => link.downlink_mbps,
    };
    let lat = link.rtt_ms + 8.0 * bytes / (rate * 1000.0);
    let power = link_power(link, direction).expect("checked offline");
    (lat, power * lat / 1000.0)
}

fn resolve_explicit(
    expl: &crate::instance::ExplicitTransfers,
    t: usize,
    dir: Direction,
    warnings: &mut Vec<String>,
) -> Result<TransferEntry> {
    let direct = explicit_entry(expl, t, dir);
    if let Some(e) = direct {
        return Ok(e);
    }
    let opposite = match dir {
        Direction::Up => Direction::Down,
        Direction::Down => Direction::Up,
    };
    if let Some(e) = explicit_entry(expl, t, opposite) {
        warnings.push(format!(
            "explicit transfer for tensor {t} ({dir:?}) missing; using the \
             opposite direction's entry"
        ));
        return Ok(e);
    }
    Err(Error::validation(format!(
        "explicit_transfers: no entry covers tensor {t} in either direction"
    )))
}

fn explicit_entry(
    expl: &crate::instance::ExplicitTransfers,
    t: usize,
    dir: Direction,
) -> Option<TransferEntry> {
    match (dir, t) {
        (Direction::Up, 0) => Some(expl.upload_input),
        (Direction::Up, _) => expl.upload.get(t - 1).copied(),
        (Direction::Down, 0) => expl.download_input,
        (Direction::Down, _) => expl.download.get(t - 1).copied(),
    }
}

/// Builds chain-sized execution tables, mirroring forward costs into the
/// backward half when the profile does not cover it.
fn build_exec_tables(
    inst: &ProblemInstance,
    mode: Mode,
    opts: &TrainingOptions,
    n: usize,
    base_n: usize,
) -> Result<(TriTable, TriTable, TriTable)> {
    let profiled_span = inst.exec.mobile_lat.n();
    if profiled_span >= n {
        // Direct: take the leading n-subtriangle.
        let copy = |src: &TriTable| {
            let mut out = TriTable::new(n, 0.0);
            for i in 1..=n {
                for j in i..=n {
                    out.set(i, j, src.get(i, j));
                }
            }
            out
        };
        return Ok((
            copy(&inst.exec.mobile_lat),
            copy(&inst.exec.mobile_en),
            copy(&inst.exec.cloud_lat),
        ));
    }

    let factor = match opts.mirror {
        MirrorPolicy::Synthesize { backward_factor } => backward_factor,
        MirrorPolicy::RequireProfiles => {
            return Err(Error::validation(
                "training requires grouped profiles over layers 1..=2N, and the \
                 mirror-synthesis policy is disabled",
            ))
        }
    };
    if !(factor > 0.0) {
        return Err(Error::Argument(format!(
            "backward_factor must be > 0 (got {factor})"
        )));
    }
    debug_assert_eq!(mode, Mode::Training);

    let mirror = |src: &TriTable| {
        let mut out = TriTable::new(n, 0.0);
        for i in 1..=n {
            for j in i..=n {
                let v = if j <= base_n {
                    src.get(i, j)
                } else if i > base_n {
                    factor * src.get(2 * base_n + 1 - j, 2 * base_n + 1 - i)
                } else {
                    // Straddles the forward/backward boundary; the two
                    // phases do not fuse, so compose.
                    src.get(i, base_n) + factor * src.get(2 * base_n + 1 - j, base_n)
                };
                out.set(i, j, v);
            }
        }
        out
    };
    Ok((
        mirror(&inst.exec.mobile_lat),
        mirror(&inst.exec.mobile_en),
        mirror(&inst.exec.cloud_lat),
    ))
}
