//! Shared fixtures for integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use offload_core::instance::{
    Document, ExplicitTransfers, LayerKind, LayerSpec, ProfileEntry, Profiles, ResidualBlock,
    TransferEntry,
};
use offload_core::{LinkProfile, ProblemInstance};

pub const TOY3: &str = include_str!("../data/toy3.json");

pub fn toy3() -> ProblemInstance {
    ProblemInstance::from_json(TOY3).expect("toy3 fixture loads")
}

pub fn toy3_document() -> Document {
    Document::from_json(TOY3).unwrap()
}

/// Integer-valued random transfer entry; integer costs make exact ties
/// common, which is what exercises the deterministic tie-breaking.
fn entry(rng: &mut ChaCha8Rng) -> TransferEntry {
    TransferEntry {
        latency_ms: rng.gen_range(1..=20) as f64,
        energy_mj: rng.gen_range(1..=20) as f64,
    }
}

/// Random instance with explicit transfers and positive integer grouped
/// costs. Grouped values are independent draws, so the fusion-benefit
/// warning may fire; that is deliberate.
pub fn random_document(rng: &mut ChaCha8Rng, n: usize) -> Document {
    let layers: Vec<LayerSpec> = (1..=n)
        .map(|index| LayerSpec {
            index,
            name: format!("layer{index}"),
            kind: LayerKind::Other,
            input_bytes: 1000,
            output_bytes: 1000,
            weight_bytes: 0,
            compressible: false,
            zero_ratio: None,
            compression_ratio: None,
        })
        .collect();

    let mut profile = |cheap: bool| -> Vec<ProfileEntry> {
        let mut entries = Vec::new();
        for i in 1..=n {
            for j in i..=n {
                let scale = if cheap { 1 } else { 3 };
                entries.push(ProfileEntry {
                    i,
                    j,
                    latency_ms: (scale * rng.gen_range(1..=10) * (j - i + 1)) as f64,
                    energy_mj: (scale * rng.gen_range(1..=10) * (j - i + 1)) as f64,
                });
            }
        }
        entries
    };
    let cloud = profile(true);
    let mobile = profile(false);

    let transfers = ExplicitTransfers {
        upload_input: entry(rng),
        upload: (0..n).map(|_| entry(rng)).collect(),
        download: (0..n).map(|_| entry(rng)).collect(),
        download_input: Some(entry(rng)),
    };

    Document {
        layers,
        residual_blocks: Vec::new(),
        profiles: Profiles { mobile, cloud },
        link: LinkProfile::preset("WiFi").unwrap(),
        explicit_transfers: Some(transfers),
        mobile_idle_power_mw: 0.0,
        compression_overhead: None,
        batch_size: 1,
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> ProblemInstance {
    ProblemInstance::from_document(random_document(rng, n)).expect("random document is valid")
}

/// Random instance with one residual block placed somewhere legal.
pub fn random_instance_with_block(rng: &mut ChaCha8Rng, n: usize) -> ProblemInstance {
    assert!(n >= 3);
    let mut doc = random_document(rng, n);
    let source_layer = rng.gen_range(1..=(n - 2));
    let sink_layer = rng.gen_range((source_layer + 2)..=n);
    doc.residual_blocks = vec![ResidualBlock {
        source_layer,
        sink_layer,
        block_size: sink_layer - source_layer + 1,
    }];
    ProblemInstance::from_document(doc).expect("random document is valid")
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
