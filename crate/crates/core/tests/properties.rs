//! Randomized invariants over the cost model and solvers.

mod common;

use proptest::prelude::*;

use offload_core::instance::{LayerKind, LayerSpec};
use offload_core::types::Direction;
use offload_core::{
    brute_force, build_inference_graph, effective_transfer_bytes, shortest_schedule, transfer_cost,
    CompressionConfig, LinkProfile, Metric, Mode, OracleOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_link() -> impl Strategy<Value = LinkProfile> {
    (
        0.1f64..100.0,
        0.1f64..100.0,
        0.0f64..1000.0,
        0.0f64..1000.0,
        0.0f64..2000.0,
    )
        .prop_map(|(up, down, au, ad, beta)| LinkProfile {
            name: "custom".into(),
            uplink_mbps: up,
            downlink_mbps: down,
            alpha_u: au,
            alpha_d: ad,
            beta,
            rtt_ms: 0.0,
            offline: false,
        })
}

proptest! {
    #[test]
    fn transfer_cost_linear_in_bytes(link in arb_link(), bytes in 1u64..10_000_000) {
        let one = transfer_cost(&link, bytes, Direction::Up);
        let two = transfer_cost(&link, 2 * bytes, Direction::Up);
        prop_assert_eq!(two.latency_ms, 2.0 * one.latency_ms);
        prop_assert_eq!(two.energy_mj, 2.0 * one.energy_mj);
    }

    #[test]
    fn transfer_latency_monotone_in_rate(link in arb_link(), bytes in 1u64..10_000_000, factor in 1.0f64..16.0) {
        let mut faster = link.clone();
        faster.uplink_mbps *= factor;
        let slow = transfer_cost(&link, bytes, Direction::Up);
        let fast = transfer_cost(&faster, bytes, Direction::Up);
        prop_assert!(fast.latency_ms <= slow.latency_ms);
    }

    #[test]
    fn effective_bytes_never_exceed_raw(
        bytes in 0u64..100_000_000,
        quantize in prop::sample::select(vec![4u32, 8, 16, 32]),
        cr in 1.0f64..16.0,
    ) {
        let layer = LayerSpec {
            index: 1,
            name: "l".into(),
            kind: LayerKind::Conv,
            input_bytes: bytes,
            output_bytes: bytes,
            weight_bytes: 0,
            compressible: true,
            zero_ratio: None,
            compression_ratio: Some(cr),
        };
        let cfg = CompressionConfig {
            enabled: true,
            quantize_bits: quantize,
            default_ratio: 1.0,
            skip_kinds: Default::default(),
        };
        prop_assert!(effective_transfer_bytes(&layer, &cfg) <= bytes);
    }

    /// Any S→F path decodes to segments that tile the chain exactly once.
    #[test]
    fn solver_schedules_tile_the_chain(seed in 0u64..500, n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, n);
        let g = build_inference_graph(&inst, Metric::Latency, None).unwrap();
        let s = shortest_schedule(&g).unwrap();
        prop_assert!(s.validate_tiling(n).is_ok());
        // breakdown components always reassemble into the total
        let total = s.breakdown.computation
            + s.breakdown.upload
            + s.breakdown.download
            + s.breakdown.weight_download
            + s.breakdown.compression_overhead;
        prop_assert!((total - s.total_cost).abs() <= 1e-9 * total.abs().max(1.0));
    }

    /// The optimum never exceeds either single-platform assignment, and the
    /// oracle agrees with the graph on small chains.
    #[test]
    fn optimum_dominates_baselines(seed in 0u64..200, n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, n);
        let g = build_inference_graph(&inst, Metric::Energy, None).unwrap();
        let s = shortest_schedule(&g).unwrap();
        let oracle = brute_force(
            &inst,
            &OracleOptions::unconstrained(Mode::Inference, Metric::Energy),
        ).unwrap();
        prop_assert_eq!(s.total_cost, oracle.total_cost);
        // mobile-only cost straight from the clamped table
        let mobile_only = inst
            .segment_cost(1, n, offload_core::Platform::Mobile, Metric::Energy)
            .unwrap();
        prop_assert!(s.total_cost <= mobile_only + 1e-9);
    }

    /// Fallback composition upper-bounds grouped values on fusion-friendly
    /// profiles: deleting any non-singleton entry can only raise the cost.
    #[test]
    fn fallback_upper_bounds_fused_profiles(seed in 0u64..200) {
        // build a profile that honors the fusion benefit, then delete (1,n)
        let n = 5usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc = common::random_document(&mut rng, n);
        // rebuild grouped entries as discounted sums of singletons
        let singles: Vec<f64> = (1..=n)
            .map(|k| {
                doc.profiles.mobile.iter().find(|e| e.i == k && e.j == k).unwrap().latency_ms
            })
            .collect();
        for e in doc.profiles.mobile.iter_mut() {
            if e.j > e.i {
                let sum: f64 = singles[(e.i - 1)..e.j].iter().sum();
                e.latency_ms = sum * 0.9;
            }
        }
        let full = offload_core::ProblemInstance::from_document(doc.clone()).unwrap();
        let grouped = full
            .segment_cost(1, n, offload_core::Platform::Mobile, Metric::Latency)
            .unwrap();
        doc.profiles.mobile.retain(|e| !(e.i == 1 && e.j == n));
        let partial = offload_core::ProblemInstance::from_document(doc).unwrap();
        let composed = partial
            .segment_cost(1, n, offload_core::Platform::Mobile, Metric::Latency)
            .unwrap();
        prop_assert!(composed >= grouped - 1e-9);
    }
}
