use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autodiff::{gradient_errors, Tape};
use crate::error::Error;
use crate::graph::{build_knn_graph, PatchGraph};
use crate::tensor::Tensor;
use crate::testing::random;

fn small(conv: ConvKind, pool: PoolKind) -> ModelConfig {
    ModelConfig {
        input_dim: 6,
        hidden_dim: 8,
        num_blocks: 4,
        heads: 2,
        pooling_ratio: 0.8,
        conv,
        pool,
        mlp_hidden: vec![16, 8],
        ..ModelConfig::default()
    }
}

fn bag(n: usize, f: usize, k: usize, seed: u64) -> PatchGraph<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_knn_graph(&random(&[n, f], &mut rng).map(|v| 4.0 * v), k).unwrap()
}

fn logits(g: &PatchGraph<f64>, params: &ModelParams<f64>, cfg: &ModelConfig) -> Vec<f64> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, cfg).unwrap();
    let out = mustang_forward(&mut tape, g, &bound, cfg).unwrap();
    tape.value(out.logits).data().to_vec()
}

/// Smallest score gap between the last kept and first dropped node over all
/// blocks; near zero means the kept set depends on node order.
fn cut_margin(g: &PatchGraph<f64>, params: &ModelParams<f64>, cfg: &ModelConfig) -> f64 {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, cfg).unwrap();
    let out = mustang_forward(&mut tape, g, &bound, cfg).unwrap();
    let mut margin = f64::INFINITY;
    for b in &out.blocks {
        let mut s = tape.value(b.scores).data().to_vec();
        s.sort_by(|x, y| y.partial_cmp(x).unwrap());
        if b.kept.len() < s.len() {
            margin = margin.min(s[b.kept.len() - 1] - s[b.kept.len()]);
        }
    }
    margin
}

const VARIANTS: [(ConvKind, PoolKind); 4] = [
    (ConvKind::Gat, PoolKind::Sag),
    (ConvKind::Gat, PoolKind::TopK),
    (ConvKind::Gcn, PoolKind::Sag),
    (ConvKind::Gcn, PoolKind::TopK),
];

#[test]
fn default_parameter_budget() {
    let cfg = ModelConfig::default();
    let (f, h, m, b) = (1024, 384, 2, 4);
    let gat = m * (f * h + 2 * h) + (b - 1) * m * (h * h + 2 * h);
    let sag = b * h;
    let mlp = (2 * h * b) * 512 + 512 + 512 * 128 + 128 + 128 * 2 + 2;
    let expected = gat + sag + mlp;
    let params = init_params::<f64>(&cfg, 0).unwrap();
    assert_eq!(params.total_param_count(), expected);
    assert_eq!(expected, 3_318_146);
    let rel = (expected as f64 - 3.29e6).abs() / 3.29e6;
    assert!(rel < 0.2);
    assert_eq!(cfg.mlp_dims(), vec![3072, 512, 128, 2]);
}

#[test]
fn init_is_deterministic_and_within_glorot_bounds() {
    let cfg = small(ConvKind::Gat, PoolKind::Sag);
    let a = init_params::<f64>(&cfg, 7).unwrap();
    let b = init_params::<f64>(&cfg, 7).unwrap();
    let c = init_params::<f64>(&cfg, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.total_param_count(), c.total_param_count());
    for (spec, t) in a.layout().iter().zip(a.tensors()) {
        let fan_in = t.shape()[0];
        let fan_out = if t.shape().len() > 1 { t.shape()[1] } else { 1 };
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        if spec.name.ends_with(".bias") {
            assert!(t.data().iter().all(|&v| v == 0.0));
        } else {
            assert!(t.data().iter().all(|&v| v.abs() <= bound), "{}", spec.name);
            assert!(t.data().iter().any(|&v| v != 0.0));
        }
    }
}

#[test]
fn parameter_layouts_per_variant() {
    for (conv, pool) in VARIANTS {
        let cfg = small(conv, pool);
        let p = init_params::<f64>(&cfg, 0).unwrap();
        let h = 8;
        let per_block_conv = |fin: usize| match conv {
            ConvKind::Gat => 2 * (fin * h + 2 * h),
            ConvKind::Gcn => fin * h,
        };
        let expected = per_block_conv(6) + 3 * per_block_conv(h) + 4 * h + (64 * 16 + 16) + (16 * 8 + 8) + (8 * 2 + 2);
        assert_eq!(p.total_param_count(), expected);
        let mut tape = Tape::new();
        let bound = p.bind(&mut tape, &cfg).unwrap();
        assert_eq!(bound.vars.len(), p.tensors().len());
        assert_eq!(bound.blocks.len(), 4);
        assert_eq!(bound.mlp.len(), 3);
    }
}

#[test]
fn mismatched_parameters_are_rejected() {
    let cfg = small(ConvKind::Gat, PoolKind::Sag);
    let p = init_params::<f64>(&cfg, 0).unwrap();
    let mut tape = Tape::new();
    let other = small(ConvKind::Gcn, PoolKind::Sag);
    assert!(matches!(p.bind(&mut tape, &other), Err(Error::Config(_))));
    let mut tensors = p.clone().into_tensors();
    tensors[0] = Tensor::zeros(vec![5, 8]);
    assert!(matches!(ModelParams::from_tensors(&cfg, tensors), Err(Error::Dimension(_))));
    let mut tensors = p.into_tensors();
    tensors.pop();
    assert!(ModelParams::from_tensors(&cfg, tensors).is_err());
}

#[test]
fn config_validation_and_serde() {
    let cfg = ModelConfig::default();
    cfg.validate().unwrap();
    let json = serde_json::to_string(&cfg).unwrap();
    let back: ModelConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, cfg);
    let partial: ModelConfig = serde_json::from_str(r#"{"hidden_dim": 16, "conv": "gcn", "pool": "top_k"}"#).unwrap();
    assert_eq!(partial.hidden_dim, 16);
    assert_eq!(partial.conv, ConvKind::Gcn);
    assert_eq!(partial.pool, PoolKind::TopK);
    assert_eq!(partial.num_blocks, 4);
    for bad in [
        ModelConfig { num_blocks: 0, ..cfg.clone() },
        ModelConfig { heads: 0, ..cfg.clone() },
        ModelConfig { pooling_ratio: 0.0, ..cfg.clone() },
        ModelConfig { pooling_ratio: 1.5, ..cfg.clone() },
        ModelConfig { mlp_hidden: vec![64], ..cfg.clone() },
    ] {
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(init_params::<f64>(&bad, 0).is_err());
    }
}

#[test]
fn forward_shapes() {
    for (conv, pool) in VARIANTS {
        let cfg = small(conv, pool);
        let p = init_params::<f64>(&cfg, 1).unwrap();
        let g = bag(30, 6, 5, 2);
        let mut tape = Tape::new();
        let bound = p.bind(&mut tape, &cfg).unwrap();
        let out = mustang_forward(&mut tape, &g, &bound, &cfg).unwrap();
        assert_eq!(tape.shape(out.logits), &[2]);
        assert_eq!(out.blocks.len(), 4);
        let total: usize = out.blocks.iter().map(|b| tape.value(b.readout).numel()).sum();
        assert_eq!(total, cfg.readout_dim());
        let sizes: Vec<usize> = out.blocks.iter().map(|b| b.graph.num_nodes()).collect();
        assert_eq!(sizes, vec![24, 20, 16, 13]);
        for b in &out.blocks {
            assert!(b.graph.node_origin().iter().all(|&o| o < 30));
            assert_eq!(b.attention.len(), if conv == ConvKind::Gat { 2 } else { 0 });
        }
    }
}

#[test]
fn rejects_bad_bags() {
    let cfg = small(ConvKind::Gat, PoolKind::Sag);
    let p = init_params::<f64>(&cfg, 1).unwrap();
    let mut tape = Tape::new();
    let bound = p.bind(&mut tape, &cfg).unwrap();
    let wrong = bag(5, 4, 2, 0);
    assert!(matches!(mustang_forward(&mut tape, &wrong, &bound, &cfg), Err(Error::Dimension(_))));
    let empty = PatchGraph::<f64>::from_features(Tensor::zeros(vec![0, 6])).unwrap();
    assert!(matches!(mustang_forward(&mut tape, &empty, &bound, &cfg), Err(Error::EmptyBag(_))));
}

#[test]
fn single_node_bag_is_finite() {
    for (conv, pool) in VARIANTS {
        let cfg = small(conv, pool);
        let p = init_params::<f64>(&cfg, 3).unwrap();
        let g = bag(1, 6, 5, 4);
        assert_eq!(g.num_edges(), 0);
        let l = logits(&g, &p, &cfg);
        assert!(l.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn zero_conv_weights_cut_the_input_off() {
    let cfg = ModelConfig { pooling_ratio: 1.0, ..small(ConvKind::Gat, PoolKind::Sag) };
    let mut p = init_params::<f64>(&cfg, 5).unwrap();
    let names: Vec<String> = p.layout().iter().map(|s| s.name.clone()).collect();
    for (name, t) in names.iter().zip(p.tensors_mut()) {
        if name.contains(".gat") {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let a = logits(&bag(10, 6, 3, 1), &p, &cfg);
    let b = logits(&bag(17, 6, 4, 2), &p, &cfg);
    assert_eq!(a, b);
}

#[test]
fn block_sizes_follow_nested_ceilings() {
    for ratio in [0.5, 0.8, 1.0] {
        let cfg = ModelConfig { pooling_ratio: ratio, hidden_dim: 4, mlp_hidden: vec![4, 4], ..small(ConvKind::Gat, PoolKind::Sag) };
        let p = init_params::<f64>(&cfg, 0).unwrap();
        for n in 1..=50 {
            let g = bag(n, 6, 3, n as u64);
            let mut tape = Tape::new();
            let bound = p.bind(&mut tape, &cfg).unwrap();
            let out = mustang_forward(&mut tape, &g, &bound, &cfg).unwrap();
            let mut expected = n;
            for block in &out.blocks {
                // exact rational ceiling, independent of the float helper
                let num = (ratio * 10.0).round() as usize;
                expected = (expected * num).div_ceil(10).max(1);
                assert_eq!(block.graph.num_nodes(), expected);
            }
        }
    }
}

#[test]
fn end_to_end_gradients_match_finite_differences() {
    for (conv, pool) in VARIANTS {
        let cfg = small(conv, pool);
        let p = init_params::<f64>(&cfg, 1).unwrap();
        let g = bag(12, 6, 3, 101);
        let errs = gradient_errors(p.tensors(), 1e-6, |tape, vars| {
            let bound = BoundModel::from_vars(&cfg, vars.to_vec()).unwrap();
            let out = mustang_forward(tape, &g, &bound, &cfg).unwrap();
            let ls = tape.log_softmax(out.logits).unwrap();
            let picked = tape.pick(ls, 1).unwrap();
            tape.scale(picked, -1.0)
        });
        let err = errs.iter().fold(0.0, |a: f64, e| a.max(e.relative));
        assert!(err < 1e-4, "{conv:?}/{pool:?}: {err}");
    }
}

#[test]
fn estimator_edge_term_is_linear_in_k() {
    let cfg = ModelConfig::default();
    let a = resource_estimate(2000, 5, &cfg);
    let b = resource_estimate(2000, 10, &cfg);
    assert_eq!(b.edge_flops, 2.0 * a.edge_flops);
    assert_eq!(a.dense_flops, b.dense_flops);
    let tiny = resource_estimate(1, 1, &cfg);
    assert!(tiny.flops > 0 && tiny.peak_bytes > 0);
    assert_eq!(tiny.edge_flops, 0.0);
    assert!(b.peak_bytes > a.peak_bytes);
    assert_eq!(a.dense_flops, a.node_flops + a.fixed_flops);
}

#[test]
fn estimator_node_term_doubles_with_n() {
    // 0.8⁴ = 256/625, so every pooled size is exact for multiples of 625
    let cfg = ModelConfig::default();
    let a = resource_estimate(1250, 5, &cfg);
    let b = resource_estimate(2500, 5, &cfg);
    assert_eq!(b.node_flops, 2.0 * a.node_flops);
    assert_eq!(b.fixed_flops, a.fixed_flops);
}

#[test]
fn estimator_matches_instrumented_forward() {
    for (conv, pool) in VARIANTS {
        for (n, k) in [(200, 5), (300, 20), (64, 10)] {
            let cfg = ModelConfig { input_dim: 32, hidden_dim: 16, mlp_hidden: vec![32, 16], conv, pool, ..ModelConfig::default() };
            let p = init_params::<f64>(&cfg, 0).unwrap();
            let g = bag(n, 32, k, 9);
            let mut tape = Tape::new();
            let bound = p.bind(&mut tape, &cfg).unwrap();
            mustang_forward(&mut tape, &g, &bound, &cfg).unwrap();
            let est = resource_estimate(n, k, &cfg);
            let measured = tape.flops() as f64;
            let rel = (est.flops as f64 - measured).abs() / measured;
            assert!(rel < 0.1, "{conv:?}/{pool:?} n={n} k={k}: est {} vs {measured}", est.flops);
            let stored = tape.intermediate_scalars() as f64;
            let rel = (est.activations - stored).abs() / stored;
            assert!(rel < 0.1, "activations {} vs {stored}", est.activations);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn logits_are_permutation_invariant(seed in 0u64..10_000) {
        let cfg = small(ConvKind::Gat, PoolKind::Sag);
        let p = init_params::<f64>(&cfg, seed).unwrap();
        let g = bag(15, 6, 4, seed);
        let mut perm: Vec<usize> = (0..15).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1));
        prop_assume!(cut_margin(&g, &p, &cfg) > 1e-9);
        let a = logits(&g, &p, &cfg);
        let b = logits(&g.permuted(&perm).unwrap(), &p, &cfg);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}


