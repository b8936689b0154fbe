//! End-to-end behaviors: residual expansion, compression economics,
//! training sweeps, lookup tables, and pattern reporting.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{toy3, toy3_document};
use offload_core::instance::{ResidualBlock, TransferEntry};
use offload_core::lookup::{AxisGrid, AxisValue};
use offload_core::scenario::ScenarioSpec;
use offload_core::{
    brute_force, build_inference_graph, query_lookup, shortest_schedule, solve_scenario,
    sweep_lookup, synth_benchmark, BenchmarkShape, CompressionConfig, Metric, Mode, OracleOptions,
    Platform, ProblemInstance, TrainingOptions,
};

fn latency_optimum(inst: &ProblemInstance) -> offload_core::Schedule {
    let mut g = build_inference_graph(inst, Metric::Latency, None).unwrap();
    for block in inst.residual_blocks() {
        g = g.expand_residual(block).unwrap();
    }
    shortest_schedule(&g).unwrap()
}

#[test]
fn residual_with_free_skip_changes_nothing() {
    // 5 layers, free skip tensor: expansion must not move the optimum.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut doc = common::random_document(&mut rng, 5);
    let t = doc.explicit_transfers.as_mut().unwrap();
    t.upload[1] = TransferEntry {
        latency_ms: 0.0,
        energy_mj: 0.0,
    };
    t.download[1] = TransferEntry {
        latency_ms: 0.0,
        energy_mj: 0.0,
    };
    let plain = ProblemInstance::from_document(doc.clone()).unwrap();
    doc.residual_blocks = vec![ResidualBlock {
        source_layer: 2,
        sink_layer: 4,
        block_size: 3,
    }];
    let with_block = ProblemInstance::from_document(doc).unwrap();

    let base = latency_optimum(&plain);
    let expanded = latency_optimum(&with_block);
    assert_eq!(base.total_cost, expanded.total_cost);
}

#[test]
fn residual_expansion_matches_oracle_on_seeded_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut doc = common::random_document(&mut rng, 5);
    doc.residual_blocks = vec![ResidualBlock {
        source_layer: 2,
        sink_layer: 4,
        block_size: 3,
    }];
    let inst = ProblemInstance::from_document(doc).unwrap();
    let fast = latency_optimum(&inst);
    let oracle = brute_force(
        &inst,
        &OracleOptions::unconstrained(Mode::Inference, Metric::Latency),
    )
    .unwrap();
    assert_eq!(fast.total_cost, oracle.total_cost);
    assert_eq!(fast.segments, oracle.segments);
}

#[test]
fn unpayable_skip_download_pins_source_and_sink_together() {
    // Cloud is cheap for the head of the chain and dear for the tail, so
    // the baseline optimum computes the skip source on cloud and the sink
    // on mobile. Once the skip-tensor download becomes unpayable, no
    // optimum may keep that crossing.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut doc = common::random_document(&mut rng, 5);
    for e in doc.profiles.mobile.iter_mut() {
        e.latency_ms = 10.0 * (e.j - e.i + 1) as f64;
    }
    for e in doc.profiles.cloud.iter_mut() {
        e.latency_ms = if e.j <= 3 { 0.1 } else { 50.0 } * (e.j - e.i + 1) as f64;
    }
    let t = doc.explicit_transfers.as_mut().unwrap();
    let unit = TransferEntry {
        latency_ms: 1.0,
        energy_mj: 1.0,
    };
    t.upload_input = unit;
    t.download_input = Some(unit);
    for e in t.upload.iter_mut().chain(t.download.iter_mut()) {
        *e = unit;
    }
    t.download[4] = TransferEntry {
        latency_ms: 100.0,
        energy_mj: 100.0,
    };
    doc.residual_blocks = vec![ResidualBlock {
        source_layer: 2,
        sink_layer: 4,
        block_size: 3,
    }];
    let inst = ProblemInstance::from_document(doc).unwrap();
    let plat = |s: &offload_core::Schedule, layer: usize| {
        s.segments
            .iter()
            .find(|g| g.start <= layer && layer <= g.end)
            .unwrap()
            .platform
    };
    let s = latency_optimum(&inst);
    assert_eq!(plat(&s, 2), Platform::Cloud);
    assert_eq!(plat(&s, 4), Platform::Mobile);

    let mut doc = inst.document().clone();
    doc.explicit_transfers.as_mut().unwrap().download[1] = TransferEntry {
        latency_ms: 1e15,
        energy_mj: 1e15,
    };
    let expensive = ProblemInstance::from_document(doc).unwrap();
    let s2 = latency_optimum(&expensive);
    assert!(
        !(plat(&s2, 2) == Platform::Cloud && plat(&s2, 4) == Platform::Mobile),
        "optimum crossed an unpayable skip: {:?}",
        s2.segments
    );
    // the oracle agrees about the reshaped optimum
    let oracle = brute_force(
        &expensive,
        &OracleOptions::unconstrained(Mode::Inference, Metric::Latency),
    )
    .unwrap();
    assert_eq!(s2.segments, oracle.segments);
}

#[test]
fn offline_link_sentinel_forces_mobile_even_with_blocks() {
    // With an offline link the unreachable sentinel rides every cloud
    // route, residual chains included, and the finite optimum is all-mobile.
    let mut doc = synth_benchmark(BenchmarkShape::Discriminative, 8, 3)
        .unwrap()
        .document()
        .clone();
    doc.link.offline = true;
    doc.residual_blocks = vec![ResidualBlock {
        source_layer: 2,
        sink_layer: 5,
        block_size: 4,
    }];
    let inst = ProblemInstance::from_document(doc).unwrap();
    let s = latency_optimum(&inst);
    assert_eq!(s.pattern(), "M");
    assert!(s.total_cost.is_finite());
}

#[test]
fn compression_disabled_is_cost_identical() {
    let inst = toy3();
    let same = inst
        .apply_compression(&CompressionConfig::disabled())
        .unwrap();
    let a = latency_optimum(&inst);
    let b = latency_optimum(&same);
    assert_eq!(a.total_cost, b.total_cost);
    assert_eq!(a.segments, b.segments);
}

#[test]
fn compression_cr2_halves_every_transfer() {
    // quantize_bits 32 with CR 2 is a pure x2 shrink on the wire
    let cfg = CompressionConfig {
        quantize_bits: 32,
        default_ratio: 2.0,
        skip_kinds: Default::default(),
        ..CompressionConfig::default()
    };
    let mut doc = toy3_document();
    for l in doc.layers.iter_mut() {
        l.compression_ratio = Some(2.0);
    }
    let inst = ProblemInstance::from_document(doc).unwrap();
    let squeezed = inst.apply_compression(&cfg).unwrap();

    // all transfer tables halve, the input upload included
    let base = offload_core::ChainCosts::inference(&inst).unwrap();
    let tight = offload_core::ChainCosts::inference(&squeezed).unwrap();
    for b in 0..=2usize {
        assert_eq!(
            tight.upload(Metric::Latency, b),
            base.upload(Metric::Latency, b) / 2.0
        );
    }
    for b in 1..=3usize {
        assert_eq!(
            tight.download(Metric::Energy, b),
            base.download(Metric::Energy, b) / 2.0
        );
    }

    // cheap transfers flip the optimum to cloud-only:
    // 4/2 + CE(1,3) + 8/2 = 9
    let s = latency_optimum(&squeezed);
    assert_eq!(s.total_cost, 9.0);
    assert_eq!(s.pattern(), "C");
    let oracle = brute_force(
        &squeezed,
        &OracleOptions::unconstrained(Mode::Inference, Metric::Latency),
    )
    .unwrap();
    assert_eq!(oracle.total_cost, s.total_cost);
}

#[test]
fn compression_overhead_can_push_everything_back_on_device() {
    let cfg = CompressionConfig {
        quantize_bits: 32,
        default_ratio: 2.0,
        skip_kinds: Default::default(),
        ..CompressionConfig::default()
    };
    let mut doc = toy3_document();
    for l in doc.layers.iter_mut() {
        l.compression_ratio = Some(2.0);
    }
    doc.compression_overhead = Some(vec![
        TransferEntry {
            latency_ms: 100.0,
            energy_mj: 100.0,
        };
        3
    ]);
    let inst = ProblemInstance::from_document(doc).unwrap();
    let squeezed = inst.apply_compression(&cfg).unwrap();
    let s = latency_optimum(&squeezed);
    assert_eq!(s.pattern(), "M");
    assert_eq!(s.total_cost, 16.0);
}

#[test]
fn training_rho_sweep_through_lookup_table() {
    let mut doc = toy3_document();
    for l in doc.layers.iter_mut() {
        l.weight_bytes = 1_500_000;
    }
    let inst = ProblemInstance::from_document(doc).unwrap();
    let mut spec = ScenarioSpec::unconstrained(Mode::Training, Metric::Latency);
    spec.update_fraction = 0.0;
    let table = sweep_lookup(
        &inst,
        vec![AxisGrid {
            name: "rho".into(),
            values: vec![
                AxisValue::Num(0.0),
                AxisValue::Num(0.5),
                AxisValue::Num(1.0),
            ],
        }],
        &spec,
        100,
    )
    .unwrap();
    assert_eq!(table.cells.len(), 3);
    let costs: Vec<f64> = table.cells.iter().map(|c| c.schedule.total_cost).collect();
    let mut by_rho: Vec<(f64, f64)> = table
        .cells
        .iter()
        .map(|c| (c.point[0].as_num_test(), c.schedule.total_cost))
        .collect();
    by_rho.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert!(
        by_rho.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9),
        "{costs:?}"
    );
}

trait AxisValueExt {
    fn as_num_test(&self) -> f64;
}
impl AxisValueExt for AxisValue {
    fn as_num_test(&self) -> f64 {
        match self {
            AxisValue::Num(v) => *v,
            AxisValue::Name(_) => panic!("numeric axis expected"),
        }
    }
}

#[test]
fn lookup_table_roundtrips_through_json() {
    let inst = toy3();
    let spec = ScenarioSpec::unconstrained(Mode::Inference, Metric::Latency);
    let table = sweep_lookup(
        &inst,
        vec![AxisGrid {
            name: "uplink_mbps".into(),
            values: vec![AxisValue::Num(1.1), AxisValue::Num(18.88)],
        }],
        &spec,
        100,
    )
    .unwrap();
    let text = table.to_json();
    let back = offload_core::LookupTable::from_json(&text).unwrap();
    assert_eq!(back.cells.len(), 2);
    let mut point = std::collections::BTreeMap::new();
    point.insert("uplink_mbps".to_string(), AxisValue::Num(18.88));
    let cell = query_lookup(&back, inst.content_hash(), &point).unwrap();
    assert_eq!(cell.schedule.total_cost, 13.5);
}

#[test]
fn synthetic_patterns_survive_the_oracle_at_small_sizes() {
    // generator patterns are not an artifact of the graph: at oracle-sized
    // instances the exhaustive optimum shows the same shape
    for (shape, n) in [
        (BenchmarkShape::Discriminative, 12),
        (BenchmarkShape::Generative, 10),
        (BenchmarkShape::Autoencoder, 12),
    ] {
        let inst = synth_benchmark(shape, n, 7).unwrap();
        let fast = latency_optimum(&inst);
        let oracle = brute_force(
            &inst,
            &OracleOptions::unconstrained(Mode::Inference, Metric::Latency),
        )
        .unwrap();
        assert_eq!(fast.total_cost, oracle.total_cost, "{shape:?}");
        assert_eq!(fast.segments, oracle.segments, "{shape:?}");
    }
}

#[test]
fn training_without_mirror_policy_requires_backward_profiles() {
    let inst = toy3();
    let opts = TrainingOptions {
        update_fraction: 0.0,
        mirror: offload_core::MirrorPolicy::RequireProfiles,
    };
    assert!(offload_core::build_training_graph(&inst, Metric::Latency, &opts, None).is_err());
}

#[test]
fn training_accepts_full_backward_profiles() {
    // documents may profile the whole 2N chain directly; mirroring the
    // forward entries at 2x by hand must land on the same optimum as the
    // synthesis policy's default
    fn extend(
        entries: &[offload_core::instance::ProfileEntry],
    ) -> Vec<offload_core::instance::ProfileEntry> {
        let mut out = entries.to_vec();
        for e in entries {
            out.push(offload_core::instance::ProfileEntry {
                i: 7 - e.j,
                j: 7 - e.i,
                latency_ms: 2.0 * e.latency_ms,
                energy_mj: 2.0 * e.energy_mj,
            });
        }
        let lookup = |i: usize, j: usize| {
            entries
                .iter()
                .find(|e| e.i == i && e.j == j)
                .map(|e| (e.latency_ms, e.energy_mj))
                .unwrap()
        };
        for i in 1..=3usize {
            for j in 4..=6usize {
                let fwd = lookup(i, 3);
                let bwd = lookup(7 - j, 3);
                out.push(offload_core::instance::ProfileEntry {
                    i,
                    j,
                    latency_ms: fwd.0 + 2.0 * bwd.0,
                    energy_mj: fwd.1 + 2.0 * bwd.1,
                });
            }
        }
        out
    }
    let mut doc = toy3_document();
    doc.profiles.mobile = extend(&doc.profiles.mobile);
    doc.profiles.cloud = extend(&doc.profiles.cloud);
    let inst = ProblemInstance::from_document(doc).unwrap();
    assert!(inst.has_backward_profiles());
    let opts = TrainingOptions {
        update_fraction: 0.0,
        mirror: offload_core::MirrorPolicy::RequireProfiles,
    };
    let g = offload_core::build_training_graph(&inst, Metric::Latency, &opts, None).unwrap();
    let s = shortest_schedule(&g).unwrap();

    let synth = offload_core::build_training_graph(
        &toy3(),
        Metric::Latency,
        &TrainingOptions::default(),
        None,
    )
    .unwrap();
    let s2 = shortest_schedule(&synth).unwrap();
    assert_eq!(s.total_cost, s2.total_cost);
}

#[test]
fn report_csv_fields_match_solve() {
    let outcome = solve_scenario(
        &toy3(),
        &ScenarioSpec::unconstrained(Mode::Inference, Metric::Latency),
    )
    .unwrap();
    assert_eq!(outcome.schedule.pattern(), "C→M");
    assert!((outcome.report.energy_improvement_pct - (1.0 - 23.0 / 24.0) * 100.0).abs() < 1e-9);
}

#[test]
fn graph_weights_ignore_names_and_kinds() {
    let inst = toy3();
    let mut doc = inst.document().clone();
    for (k, l) in doc.layers.iter_mut().enumerate() {
        l.name = format!("renamed{k}");
        l.kind = offload_core::instance::LayerKind::Lstm;
    }
    let renamed = ProblemInstance::from_document(doc).unwrap();
    let a = build_inference_graph(&inst, Metric::Latency, None).unwrap();
    let b = build_inference_graph(&renamed, Metric::Latency, None).unwrap();
    assert_eq!(a.dump(), b.dump());
}

#[test]
fn sweep_content_is_deterministic() {
    let inst = toy3();
    let spec = ScenarioSpec::unconstrained(Mode::Inference, Metric::Latency);
    let axes = || {
        vec![AxisGrid {
            name: "uplink_mbps".into(),
            values: vec![
                AxisValue::Num(1.1),
                AxisValue::Num(5.85),
                AxisValue::Num(18.88),
            ],
        }]
    };
    let a = sweep_lookup(&inst, axes(), &spec, 100).unwrap();
    let b = sweep_lookup(&inst, axes(), &spec, 100).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn malformed_documents_report_parse_errors() {
    let err = ProblemInstance::from_json("{ not json").unwrap_err();
    assert!(matches!(err, offload_core::Error::Parse(_)));
    let err = ProblemInstance::from_json("{\"layers\": []}").unwrap_err();
    assert!(matches!(err, offload_core::Error::Parse(_)));
}

#[test]
fn parse_errors_carry_the_field_path() {
    let mut text = common::TOY3.to_string();
    text = text.replace("\"latency_ms\": 5.0", "\"latency_ms\": \"fast\"");
    let err = ProblemInstance::from_json(&text).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("profiles.mobile"), "{msg}");
    assert!(msg.contains("latency_ms"), "{msg}");
}

#[test]
fn evaluator_checks_training_schedules_that_end_on_cloud() {
    // exercises the exported model's documented omission of the final
    // download: the evaluator must reconcile it, not fail
    let inst = toy3();
    let mut spec = ScenarioSpec::unconstrained(Mode::Training, Metric::Latency);
    spec.update_fraction = 0.25;
    let sched = offload_core::Schedule {
        mode: Mode::Training,
        objective: Metric::Latency,
        segments: vec![
            offload_core::Segment {
                start: 1,
                end: 5,
                platform: Platform::Mobile,
            },
            offload_core::Segment {
                start: 6,
                end: 6,
                platform: Platform::Cloud,
            },
        ],
        total_cost: 0.0,
        total_resource: None,
        breakdown: Default::default(),
    };
    let b = offload_core::evaluate_schedule(&inst, &sched, &spec).unwrap();
    // final download of the input-sized gradient, synthesized from
    // upload_input = 4
    assert!(b.download >= 4.0);
}

#[test]
fn evaluator_checks_schedules_with_residual_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut doc = common::random_document(&mut rng, 5);
    doc.residual_blocks = vec![ResidualBlock {
        source_layer: 2,
        sink_layer: 4,
        block_size: 3,
    }];
    let inst = ProblemInstance::from_document(doc).unwrap();
    let spec = ScenarioSpec::unconstrained(Mode::Inference, Metric::Latency);
    let outcome = solve_scenario(&inst, &spec).unwrap();
    let b = offload_core::evaluate_schedule(&inst, &outcome.schedule, &spec).unwrap();
    assert_eq!(b.total(), outcome.schedule.total_cost);
}

#[test]
fn inference_ignores_extra_backward_profile_entries() {
    // a document profiled over the whole 2N chain still solves inference
    // over its leading N layers, identically to the N-only document
    let base = toy3();
    let mut doc = toy3_document();
    for k in 4..=6usize {
        for (entries, scale) in [
            (&mut doc.profiles.mobile, 9.0),
            (&mut doc.profiles.cloud, 2.0),
        ] {
            entries.push(offload_core::instance::ProfileEntry {
                i: k,
                j: k,
                latency_ms: scale,
                energy_mj: scale,
            });
        }
    }
    let extended = ProblemInstance::from_document(doc).unwrap();
    assert!(extended.has_backward_profiles());
    let a = latency_optimum(&base);
    let b = latency_optimum(&extended);
    assert_eq!(a.total_cost, b.total_cost);
    assert_eq!(a.segments, b.segments);
}

#[test]
fn solve_and_evaluate_agree_across_random_scenarios() {
    use offload_core::scenario::Constraint;
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(70_000 + seed);
        let n = rand::Rng::gen_range(&mut rng, 2..=8);
        let inst = common::random_instance(&mut rng, n);
        let specs = [
            ScenarioSpec::unconstrained(Mode::Inference, Metric::Latency),
            ScenarioSpec::unconstrained(Mode::Inference, Metric::Energy),
            ScenarioSpec {
                constraint: Constraint::Battery(1e6),
                ..ScenarioSpec::unconstrained(Mode::Inference, Metric::Latency)
            },
            ScenarioSpec {
                constraint: Constraint::Qos(1e6),
                ..ScenarioSpec::unconstrained(Mode::Inference, Metric::Energy)
            },
            ScenarioSpec {
                constraint: Constraint::CloudTime(1e6),
                ..ScenarioSpec::unconstrained(Mode::Inference, Metric::Latency)
            },
        ];
        for spec in specs {
            let outcome = solve_scenario(&inst, &spec).unwrap();
            let breakdown = offload_core::evaluate_schedule(&inst, &outcome.schedule, &spec)
                .unwrap_or_else(|e| panic!("seed {seed} {spec:?}: {e}"));
            assert_eq!(breakdown.total(), outcome.schedule.total_cost);
        }
    }
}

#[test]
fn constrained_solver_matches_oracle_on_residual_instances() {
    use offload_core::{constrained_schedule, ResourceMetric};
    for seed in 0..25u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(50_000 + seed);
        let n = rand::Rng::gen_range(&mut rng, 3..=8);
        let inst = common::random_instance_with_block(&mut rng, n);
        let block = inst.residual_blocks()[0];
        let g = build_inference_graph(&inst, Metric::Latency, Some(ResourceMetric::Energy))
            .unwrap()
            .expand_residual(&block)
            .unwrap();

        let mut opts = OracleOptions::unconstrained(Mode::Inference, Metric::Latency);
        opts.resource_metric = Some(ResourceMetric::Energy);
        let unconstrained = brute_force(&inst, &opts).unwrap();
        let bound = unconstrained.total_resource.unwrap() * 0.9;
        opts.bound = Some(bound);

        match (constrained_schedule(&g, bound), brute_force(&inst, &opts)) {
            (Ok(fast), Ok(oracle)) => {
                assert_eq!(fast.total_cost, oracle.total_cost, "seed {seed}");
                assert_eq!(fast.segments, oracle.segments, "seed {seed}");
            }
            (
                Err(offload_core::Error::Infeasible {
                    min_achievable_resource: a,
                }),
                Err(offload_core::Error::Infeasible {
                    min_achievable_resource: b,
                }),
            ) => {
                assert_eq!(a, b, "seed {seed}");
            }
            (f, o) => panic!("seed {seed}: solver={f:?} oracle={o:?}"),
        }
    }
}

#[test]
fn constrained_solver_matches_oracle_on_training_chains() {
    use offload_core::{build_training_graph, constrained_schedule, ResourceMetric};
    let mut doc = toy3_document();
    doc.layers[0].weight_bytes = 800_000;
    doc.layers[1].weight_bytes = 300_000;
    doc.layers[2].weight_bytes = 1_200_000;
    let inst = ProblemInstance::from_document(doc).unwrap();

    for rho in [0.0, 0.5, 1.0] {
        let opts = TrainingOptions::with_update_fraction(rho);
        let g = build_training_graph(&inst, Metric::Latency, &opts, Some(ResourceMetric::Energy))
            .unwrap();
        let mut oracle_opts = OracleOptions::unconstrained(Mode::Training, Metric::Latency);
        oracle_opts.training = opts;
        oracle_opts.resource_metric = Some(ResourceMetric::Energy);
        let unconstrained = brute_force(&inst, &oracle_opts).unwrap();
        for frac in [0.7, 1.0] {
            let bound = unconstrained.total_resource.unwrap() * frac;
            oracle_opts.bound = Some(bound);
            match (
                constrained_schedule(&g, bound),
                brute_force(&inst, &oracle_opts),
            ) {
                (Ok(fast), Ok(oracle)) => {
                    assert_eq!(fast.total_cost, oracle.total_cost, "rho {rho} frac {frac}");
                    assert_eq!(fast.segments, oracle.segments, "rho {rho} frac {frac}");
                }
                (
                    Err(offload_core::Error::Infeasible {
                        min_achievable_resource: a,
                    }),
                    Err(offload_core::Error::Infeasible {
                        min_achievable_resource: b,
                    }),
                ) => {
                    assert!(
                        (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                        "rho {rho} frac {frac}"
                    );
                }
                (f, o) => panic!("rho {rho} frac {frac}: solver={f:?} oracle={o:?}"),
            }
        }
    }
}
