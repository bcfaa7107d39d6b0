use mustang::data::{synthesize, SyntheticConfig};
use mustang::model::{init_params, mustang_forward, ModelConfig, PoolKind};
use mustang::train::{stratified_split, train, Sample, TrainConfig};
use mustang::{f32 as lo, ModelParams, PatchGraph, Tape};

fn small_data() -> SyntheticConfig {
    SyntheticConfig { num_patients: 10, feature_dim: 16, patches_per_slide: (6, 10), ..Default::default() }
}

fn logits64(g: &PatchGraph, params: &ModelParams, cfg: &ModelConfig) -> Vec<f64> {
    let mut tape = Tape::new();
    let bound = params.bind_frozen(&mut tape, cfg).unwrap();
    let out = mustang_forward(&mut tape, g, &bound, cfg).unwrap();
    tape.value(out.logits).data().to_vec()
}

fn logits32(g: &lo::PatchGraph, params: &lo::ModelParams, cfg: &ModelConfig) -> Vec<f32> {
    let mut tape = lo::Tape::new();
    let bound = params.bind_frozen(&mut tape, cfg).unwrap();
    let out = mustang_forward(&mut tape, g, &bound, cfg).unwrap();
    tape.value(out.logits).data().to_vec()
}

#[test]
fn single_precision_forward_tracks_double() {
    let bags = synthesize(&small_data()).unwrap();
    for pool in [PoolKind::Sag, PoolKind::TopK] {
        let cfg = ModelConfig { input_dim: 16, hidden_dim: 8, num_blocks: 2, pool, ..Default::default() };
        let p64: ModelParams = init_params(&cfg, 3).unwrap();
        let p32: lo::ModelParams = p64.cast();
        for bag in &bags {
            let g = bag.to_graph(5).unwrap();
            let g32 = lo::PatchGraph::new(
                g.features().cast(),
                g.edges().to_vec(),
                g.slide_tags().to_vec(),
                g.node_origin().to_vec(),
            )
            .unwrap();
            let a = logits64(&g, &p64, &cfg);
            let b = logits32(&g32, &p32, &cfg);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - *y as f64).abs() <= 1e-4 * (1.0 + x.abs()), "{pool:?} {}: {x} vs {y}", bag.patient_id);
            }
        }
    }
}

#[test]
fn end_to_end_training_is_reproducible() {
    let bags = synthesize(&small_data()).unwrap();
    let samples: Vec<Sample<f64>> = bags
        .iter()
        .map(|b| Sample { id: b.patient_id.clone(), label: b.label, graph: b.to_graph(5).unwrap() })
        .collect();
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let split = stratified_split(&labels, 0.7, 0).unwrap();
    let model = ModelConfig { input_dim: 16, hidden_dim: 8, num_blocks: 2, ..Default::default() };
    let cfg = TrainConfig { epochs: 3, ..Default::default() };
    let a = train(&samples, &split, &model, &cfg).unwrap();
    let b = train(&samples, &split, &model, &cfg).unwrap();
    assert_eq!(a.history.len(), 3);
    assert_eq!(a.steps, 3 * split.train.len());
    assert_eq!(a.best_epoch, b.best_epoch);
    let bits = |o: &mustang::train::TrainOutcome<f64>| -> Vec<u64> {
        o.final_params.tensors().iter().flat_map(|t| t.data().iter().map(|v| v.to_bits())).collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert!(a.best.scores.iter().all(|s| (0.0..=1.0).contains(s)));
}
