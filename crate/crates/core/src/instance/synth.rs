//! Seeded synthetic benchmark instances.
//!
//! Three canonical tensor-size silhouettes: discriminative chains shrink
//! from a large input toward a small label vector, generative chains grow a
//! small latent into a large output, autoencoders do both around a narrow
//! middle. Cloud execution is roughly an order of magnitude faster than
//! mobile, and transfers ride a WiFi-class link, so the classic schedule
//! patterns fall out of the optimizer rather than being hard-coded.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::document::{
    Document, LayerKind, LayerSpec, LinkProfile, ProfileEntry, Profiles,
};
use crate::instance::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkShape {
    Discriminative,
    Generative,
    Autoencoder,
}

impl std::str::FromStr for BenchmarkShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discriminative" => Ok(BenchmarkShape::Discriminative),
            "generative" => Ok(BenchmarkShape::Generative),
            "autoencoder" => Ok(BenchmarkShape::Autoencoder),
            other => Err(Error::Argument(format!(
                "unknown shape '{other}' (expected discriminative, generative, autoencoder)"
            ))),
        }
    }
}

/// Deterministic synthetic instance document; identical arguments produce
/// byte-identical documents.
pub fn synth_benchmark_document(
    shape: BenchmarkShape,
    n_layers: usize,
    seed: u64,
) -> Result<Document> {
    if n_layers < 2 {
        return Err(Error::Argument(format!(
            "n_layers must be >= 2 (got {n_layers})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_layers;

    // Tensor silhouette: bytes of each layer's output, plus the input size.
    let (input_bytes, output_bytes) = tensor_silhouette(shape, n, &mut rng);

    // Per-layer mobile latency; cloud sits an order of magnitude below.
    let cloud_ratio = 10.0 * rng.gen_range(0.95..1.25);
    let mobile_ms: Vec<f64> = (0..n).map(|_| 12.0 * rng.gen_range(0.7..1.3)).collect();
    let mobile_power_mw = 3000.0 * rng.gen_range(0.9..1.1);

    let mut layers = Vec::with_capacity(n);
    for k in 0..n {
        let kind = layer_kind(shape, k, n);
        let compressible = !matches!(kind, LayerKind::Fc | LayerKind::Soft);
        let (zero_ratio, compression_ratio) = if compressible {
            let zr: f64 = rng.gen_range(0.5..0.9);
            // CR tracks ZR: mostly-zero tensors squeeze well.
            (Some(zr), Some(1.0 + 4.0 * zr * rng.gen_range(0.8..1.2)))
        } else {
            (None, None)
        };
        let weight_bytes = match kind {
            LayerKind::Fc => rng.gen_range(2_000_000..16_000_000),
            LayerKind::Conv | LayerKind::Deconv => rng.gen_range(40_000..400_000),
            _ => 0,
        };
        layers.push(LayerSpec {
            index: k + 1,
            name: format!("{}{}", kind_stem(kind), k + 1),
            kind,
            input_bytes: if k == 0 {
                input_bytes
            } else {
                output_bytes[k - 1]
            },
            output_bytes: output_bytes[k],
            weight_bytes,
            compressible,
            zero_ratio,
            compression_ratio,
        });
    }

    // Grouped profiles: per-layer sums shaved by a mild fusion benefit that
    // deepens with span length, so grouped never exceeds any split.
    let fusion = |len: usize| -> f64 { 0.96f64.powi(len as i32 - 1).max(0.75) };
    let mut mobile = Vec::new();
    let mut cloud = Vec::new();
    for i in 1..=n {
        let mut lat_sum = 0.0;
        for j in i..=n {
            lat_sum += mobile_ms[j - 1];
            let g = fusion(j - i + 1);
            let m_lat = lat_sum * g;
            let c_lat = m_lat / cloud_ratio;
            mobile.push(ProfileEntry {
                i,
                j,
                latency_ms: m_lat,
                energy_mj: m_lat * mobile_power_mw / 1000.0,
            });
            cloud.push(ProfileEntry {
                i,
                j,
                latency_ms: c_lat,
                // cloud-side draw, recorded but unused by the mobile objective
                energy_mj: c_lat * 50_000.0 / 1000.0,
            });
        }
    }
    // Keep profile entries in (i, j) reading order.
    mobile.sort_by_key(|e| (e.i, e.j));
    cloud.sort_by_key(|e| (e.i, e.j));

    Ok(Document {
        layers,
        residual_blocks: Vec::new(),
        profiles: Profiles { mobile, cloud },
        link: LinkProfile::preset("WiFi").expect("preset exists"),
        explicit_transfers: None,
        mobile_idle_power_mw: 0.0,
        compression_overhead: None,
        batch_size: 1,
    })
}

/// Convenience wrapper returning the validated instance.
pub fn synth_benchmark(
    shape: BenchmarkShape,
    n_layers: usize,
    seed: u64,
) -> Result<ProblemInstance> {
    ProblemInstance::from_document(synth_benchmark_document(shape, n_layers, seed)?)
}

fn tensor_silhouette(shape: BenchmarkShape, n: usize, rng: &mut ChaCha8Rng) -> (u64, Vec<u64>) {
    let jitter = |rng: &mut ChaCha8Rng| -> f64 { rng.gen_range(0.9..1.1) };
    match shape {
        BenchmarkShape::Discriminative => {
            let input: f64 = 600_000.0 * jitter(rng);
            let floor: f64 = 4_000.0;
            let base = (floor / input).powf(1.0 / n as f64);
            let mut out = Vec::with_capacity(n);
            let mut cur = input;
            for _ in 0..n {
                cur *= (base * jitter(rng)).min(0.98);
                out.push(cur.max(64.0) as u64);
            }
            enforce(&mut out, Direction::Decreasing);
            (input as u64, out)
        }
        BenchmarkShape::Generative => {
            let input: f64 = 4_000.0 * jitter(rng);
            let top: f64 = 600_000.0 * jitter(rng);
            let base = (top / input).powf(1.0 / n as f64);
            let mut out = Vec::with_capacity(n);
            let mut cur = input;
            for _ in 0..n {
                cur *= (base * jitter(rng)).max(1.02);
                out.push(cur as u64);
            }
            enforce(&mut out, Direction::Increasing);
            (input as u64, out)
        }
        BenchmarkShape::Autoencoder => {
            let input: f64 = 500_000.0 * jitter(rng);
            let valley: f64 = 6_000.0;
            let output: f64 = 700_000.0 * jitter(rng);
            let mid = n / 2;
            let down = (valley / input).powf(1.0 / mid as f64);
            let up = (output / valley).powf(1.0 / (n - mid) as f64);
            let mut out = Vec::with_capacity(n);
            let mut cur = input;
            for k in 0..n {
                if k < mid {
                    cur *= (down * jitter(rng)).min(0.98);
                } else {
                    cur *= (up * jitter(rng)).max(1.02);
                }
                out.push(cur.max(64.0) as u64);
            }
            // strictly below both endpoints at the narrowest point
            let m = *out.iter().min().unwrap();
            assert!(m < input as u64 && m < *out.last().unwrap());
            (input as u64, out)
        }
    }
}

enum Direction {
    Decreasing,
    Increasing,
}

fn enforce(out: &mut [u64], dir: Direction) {
    for k in 1..out.len() {
        match dir {
            Direction::Decreasing => {
                if out[k] >= out[k - 1] {
                    out[k] = out[k - 1].saturating_sub(1).max(1);
                }
            }
            Direction::Increasing => {
                if out[k] <= out[k - 1] {
                    out[k] = out[k - 1] + 1;
                }
            }
        }
    }
}

#[allow(clippy::manual_is_multiple_of)]
fn layer_kind(shape: BenchmarkShape, k: usize, n: usize) -> LayerKind {
    match shape {
        BenchmarkShape::Discriminative => {
            if k + 3 >= n {
                if k + 1 == n {
                    LayerKind::Soft
                } else {
                    LayerKind::Fc
                }
            } else {
                match k % 3 {
                    0 => LayerKind::Conv,
                    1 => LayerKind::Relu,
                    _ => LayerKind::Pool,
                }
            }
        }
        BenchmarkShape::Generative => {
            if k < 2 {
                LayerKind::Fc
            } else if k % 2 == 0 {
                LayerKind::Deconv
            } else {
                LayerKind::Relu
            }
        }
        BenchmarkShape::Autoencoder => {
            if k < n / 2 {
                if k % 2 == 0 {
                    LayerKind::Conv
                } else {
                    LayerKind::Relu
                }
            } else if k % 2 == 0 {
                LayerKind::Deconv
            } else {
                LayerKind::Relu
            }
        }
    }
}

fn kind_stem(kind: LayerKind) -> &'static str {
    match kind {
        LayerKind::Conv => "conv",
        LayerKind::Fc => "fc",
        LayerKind::Pool => "pool",
        LayerKind::Relu => "relu",
        LayerKind::Lrn => "lrn",
        LayerKind::Drop => "drop",
        LayerKind::Deconv => "deconv",
        LayerKind::Lstm => "lstm",
        LayerKind::Soft => "soft",
        LayerKind::Other => "op",
    }
}
