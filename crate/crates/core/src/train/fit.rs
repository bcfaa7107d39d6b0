use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, compute_metrics, AdamConfig, AdamState, MetricsReport, Split};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::PatchGraph;
use crate::model::{init_params, mustang_forward, positive_probability, ModelConfig, ModelParams};
use crate::scalar::Scalar;

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub split_ratio: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-9,
            epochs: 50,
            split_ratio: 0.7,
            seed: 0,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio {} outside (0, 1)", self.split_ratio)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.eps <= 0.0 {
            return Err(Error::Config("Adam eps must be positive".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }
}

/// One patient: bag graph plus label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub id: String,
    pub label: u8,
    pub graph: PatchGraph<T>,
}

/// `-log softmax(logits)[label]`.
pub fn cross_entropy<T: Scalar>(tape: &mut Tape<T>, logits: Var, label: u8) -> Result<Var> {
    let ls = tape.log_softmax(logits)?;
    let picked = tape.pick(ls, label as usize)?;
    Ok(tape.scale(picked, -T::one()))
}

/// One optimizer step on one bag; returns the loss before the update.
pub fn train_step<T: Scalar>(
    params: &mut ModelParams<T>,
    state: &mut AdamState<T>,
    sample: &Sample<T>,
    model_cfg: &ModelConfig,
    adam: &AdamConfig,
) -> Result<f64> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, model_cfg)?;
    let out = mustang_forward(&mut tape, &sample.graph, &bound, model_cfg)?;
    let loss = cross_entropy(&mut tape, out.logits, sample.label)?;
    let grads = tape.backward(loss)?;
    let grads: Vec<_> = bound.vars.iter().map(|&v| grads.get(v)).collect();
    let value = tape.value(loss).data()[0].as_f64();
    adam_step(params.tensors_mut(), &grads, state, adam)?;
    Ok(value)
}

/// Positive-class probability for one bag.
pub fn predict<T: Scalar>(params: &ModelParams<T>, cfg: &ModelConfig, graph: &PatchGraph<T>) -> Result<f64> {
    let mut tape = Tape::new();
    let bound = params.bind_frozen(&mut tape, cfg)?;
    let out = mustang_forward(&mut tape, graph, &bound, cfg)?;
    Ok(positive_probability(tape.value(out.logits).data()).as_f64())
}

/// Per-patient scores and the metrics they yield.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub report: MetricsReport,
}

pub fn evaluate<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    samples: &[&Sample<T>],
) -> Result<Evaluation> {
    let scores = samples
        .iter()
        .map(|s| predict(params, cfg, &s.graph))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let report = compute_metrics(&scores, &labels, 0.5)?;
    Ok(Evaluation { ids: samples.iter().map(|s| s.id.clone()).collect(), scores, labels, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's steps.
    pub loss: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Snapshot with the highest test F1 (earliest epoch on ties).
    pub best_params: ModelParams<T>,
    pub best_epoch: usize,
    pub best: Evaluation,
    pub final_params: ModelParams<T>,
    pub final_eval: Evaluation,
    pub history: Vec<EpochRecord>,
    pub steps: usize,
}

/// Trains from a seeded initialization, one Adam step per training bag,
/// evaluating on the test side after every epoch.
pub fn train<T: Scalar>(
    samples: &[Sample<T>],
    split: &Split,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    let pick = |idx: &[usize]| -> Result<Vec<&Sample<T>>> {
        idx.iter()
            .map(|&i| {
                samples.get(i).ok_or_else(|| {
                    Error::Contract(format!("split index {i} out of range for {} samples", samples.len()))
                })
            })
            .collect()
    };
    let train_set = pick(&split.train)?;
    let test_set = pick(&split.test)?;
    let classes = |set: &[&Sample<T>]| (set.iter().any(|s| s.label == 0), set.iter().any(|s| s.label == 1));
    if classes(&train_set) != (true, true) {
        return Err(Error::Stratification("training split holds a single class".into()));
    }
    if test_set.is_empty() {
        return Err(Error::Stratification("test split is empty".into()));
    }

    let mut params = init_params::<T>(model_cfg, train_cfg.seed)?;
    let mut state = AdamState::new(params.tensors());
    let adam = train_cfg.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(train_cfg.epochs);
    let mut best: Option<(usize, ModelParams<T>, Evaluation)> = None;
    let mut steps = 0;
    let mut last_eval = None;
    for epoch in 1..=train_cfg.epochs {
        if train_cfg.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for &i in &order {
            total += train_step(&mut params, &mut state, train_set[i], model_cfg, &adam)?;
            steps += 1;
        }
        let eval = evaluate(&params, model_cfg, &test_set)?;
        let r = &eval.report;
        history.push(EpochRecord {
            epoch,
            loss: total / train_set.len() as f64,
            f1: r.f1,
            auc: r.auc,
            sensitivity: r.sensitivity,
            specificity: r.specificity,
        });
        if best.as_ref().is_none_or(|(_, _, b)| r.f1 > b.report.f1) {
            best = Some((epoch, params.clone(), eval.clone()));
        }
        last_eval = Some(eval);
    }
    let (best_epoch, best_params, best) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        best_params,
        best_epoch,
        best,
        final_params: params,
        final_eval: last_eval.expect("at least one epoch"),
        history,
        steps,
    })
}
