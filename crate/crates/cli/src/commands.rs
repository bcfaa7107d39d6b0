use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use mustang::data::{generate_synthetic, load_bags, load_bags_with, load_checkpoint, save_checkpoint, DatasetManifest, EmbeddingBag, SyntheticConfig};
use mustang::graph::{graph_stats, spring_layout, write_edge_list, write_node_table, GraphStats};
use mustang::model::{param_layout, resource_estimate, ConvKind, ModelConfig, PoolKind, ResourceEstimate};
use mustang::train::{
    evaluate, stratified_split, train, write_history_csv, write_line_chart, write_points_csv, Evaluation, Sample,
    Split, TrainOutcome,
};
use mustang::util::write_atomic;
use serde::Serialize;

use crate::config::RunConfig;

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    write_atomic(path, &w.into_inner()?)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Synthesizes a dataset under `out` and records the generator settings.
pub fn cmd_generate(out: &Path, cfg: &SyntheticConfig) -> Result<PathBuf> {
    let manifest = generate_synthetic(out, cfg)?;
    write_json(&out.join("generator.json"), cfg)?;
    Ok(manifest)
}

/// Loads the run's bags and sets the model's input width from the manifest.
pub fn load_dataset(cfg: &mut RunConfig) -> Result<Vec<EmbeddingBag>> {
    let path = cfg.manifest()?.to_path_buf();
    if !path.is_file() {
        bail!("manifest {} does not exist", path.display());
    }
    let bags = match &cfg.stain {
        Some(stain) => load_bags_with(&path, &DatasetManifest::read(&path)?, Some(stain))?,
        None => load_bags(&path)?,
    };
    if bags.is_empty() {
        bail!("manifest {} lists no patients", path.display());
    }
    cfg.model.input_dim = bags[0].feature_dim();
    Ok(bags)
}

pub fn build_samples(bags: &[EmbeddingBag], k: usize) -> Result<Vec<Sample<f64>>> {
    bags.iter()
        .map(|b| {
            let graph = b.to_graph(k).with_context(|| format!("building graph for patient {}", b.patient_id))?;
            Ok(Sample { id: b.patient_id.clone(), label: b.label, graph })
        })
        .collect()
}

pub fn labels(bags: &[EmbeddingBag]) -> Vec<u8> {
    bags.iter().map(|b| b.label).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub patient: String,
    pub stats: GraphStats,
}

/// Per patient: k-NN graph, edge list, node table with a spring layout, and
/// one `summary.csv` row.
pub fn cmd_build_graph(cfg: &RunConfig, layout_iterations: usize) -> Result<Vec<GraphSummary>> {
    let mut cfg = cfg.clone();
    let bags = load_dataset(&mut cfg)?;
    let dir = cfg.out.join("graphs");
    let mut out = Vec::with_capacity(bags.len());
    for (bag, sample) in bags.iter().zip(build_samples(&bags, cfg.k)?) {
        let g = &sample.graph;
        write_edge_list(g, &dir.join(format!("{}.edges", bag.patient_id)))?;
        let layout = spring_layout(g, layout_iterations, cfg.train.seed);
        write_node_table(g, &layout, &dir.join(format!("{}.nodes.csv", bag.patient_id)))?;
        out.push(GraphSummary { patient: bag.patient_id.clone(), stats: graph_stats(g) });
    }
    let rows: Vec<Vec<String>> = out
        .iter()
        .map(|s| {
            vec![
                s.patient.clone(),
                s.stats.num_nodes.to_string(),
                s.stats.num_edges.to_string(),
                s.stats.components.to_string(),
                s.stats.mixing.to_string(),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("summary.csv"), &["patient", "N", "E", "components", "mixing"], &rows)?;
    cfg.write(&cfg.out.join("config.json"))?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct SplitRecord<'a> {
    hash: String,
    train: Vec<&'a str>,
    test: Vec<&'a str>,
}

fn split_record<'a>(split: &Split, bags: &'a [EmbeddingBag]) -> SplitRecord<'a> {
    let ids = |idx: &[usize]| idx.iter().map(|&i| bags[i].patient_id.as_str()).collect();
    SplitRecord { hash: split.hash_hex(), train: ids(&split.train), test: ids(&split.test) }
}

fn write_curves(dir: &Path, prefix: &str, eval: &Evaluation) -> Result<()> {
    let r = &eval.report;
    write_points_csv(&dir.join(format!("{prefix}roc.csv")), "fpr", "tpr", &r.roc_points)?;
    write_points_csv(&dir.join(format!("{prefix}pr.csv")), "recall", "precision", &r.pr_points)?;
    write_line_chart(&dir.join(format!("{prefix}roc.svg")), "ROC", "false positive rate", "true positive rate", &[("ROC", &r.roc_points)])?;
    write_line_chart(&dir.join(format!("{prefix}pr.svg")), "Precision-recall", "recall", "precision", &[("PR", &r.pr_points)])?;
    let rows: Vec<Vec<String>> = eval
        .ids
        .iter()
        .zip(&eval.scores)
        .zip(&eval.labels)
        .map(|((id, s), l)| vec![id.clone(), l.to_string(), s.to_string()])
        .collect();
    write_csv(&dir.join(format!("{prefix}scores.csv")), &["patient", "label", "score"], &rows)
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub config: RunConfig,
    pub split: Split,
    pub outcome: TrainOutcome<f64>,
}

/// Trains one model and writes config, split, checkpoints, history, metrics
/// and curves under the output directory.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainRun> {
    let mut cfg = cfg.clone();
    let bags = load_dataset(&mut cfg)?;
    cfg.validate()?;
    let samples = build_samples(&bags, cfg.k)?;
    let split = stratified_split(&labels(&bags), cfg.train.split_ratio, cfg.train.seed)?;
    let outcome = train(&samples, &split, &cfg.model, &cfg.train)?;

    let out = &cfg.out;
    cfg.write(&out.join("config.json"))?;
    write_json(&out.join("split.json"), &split_record(&split, &bags))?;
    save_checkpoint(&outcome.best_params, &cfg.model, &out.join("best.ckpt"))?;
    save_checkpoint(&outcome.final_params, &cfg.model, &out.join("final.ckpt"))?;
    write_history_csv(&out.join("history.csv"), &outcome.history)?;
    let loss: Vec<(f64, f64)> = outcome.history.iter().map(|h| (h.epoch as f64, h.loss)).collect();
    let f1: Vec<(f64, f64)> = outcome.history.iter().map(|h| (h.epoch as f64, h.f1)).collect();
    write_line_chart(&out.join("history.svg"), "Training history", "epoch", "value", &[("loss", &loss), ("test F1", &f1)])?;
    write_json(
        &out.join("metrics.json"),
        &serde_json::json!({
            "selection": "paper protocol: snapshot with the best test F1 over all epochs",
            "best_epoch": outcome.best_epoch,
            "split_hash": split.hash_hex(),
            "best": outcome.best,
            "final_epoch": outcome.final_eval,
        }),
    )?;
    write_curves(out, "", &outcome.best)?;
    Ok(TrainRun { config: cfg, split, outcome })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Test,
    Train,
    All,
}

/// Scores a checkpoint on one side of the run's split (recomputed from the
/// seed and ratio) and writes `eval_*` outputs.
pub fn cmd_evaluate(cfg: &RunConfig, checkpoint: &Path, subset: Subset) -> Result<Evaluation> {
    let mut cfg = cfg.clone();
    let (params, model) = load_checkpoint(checkpoint)?;
    let bags = load_dataset(&mut cfg)?;
    if cfg.model.input_dim != model.input_dim {
        bail!(
            "checkpoint expects {} features, dataset has {}",
            model.input_dim,
            cfg.model.input_dim
        );
    }
    cfg.model = model;
    let samples = build_samples(&bags, cfg.k)?;
    let split = stratified_split(&labels(&bags), cfg.train.split_ratio, cfg.train.seed)?;
    let idx: Vec<usize> = match subset {
        Subset::Test => split.test.clone(),
        Subset::Train => split.train.clone(),
        Subset::All => (0..samples.len()).collect(),
    };
    let chosen: Vec<&Sample<f64>> = idx.iter().map(|&i| &samples[i]).collect();
    let eval = evaluate(&params, &cfg.model, &chosen)?;
    let out = &cfg.out;
    cfg.write(&out.join("eval_config.json"))?;
    write_json(
        &out.join("evaluation.json"),
        &serde_json::json!({
            "checkpoint": checkpoint,
            "subset": subset,
            "split_hash": split.hash_hex(),
            "evaluation": eval,
        }),
    )?;
    write_curves(out, "eval_", &eval)?;
    Ok(eval)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grid {
    /// GAT/GCN × SAGPool/TopK
    Models,
    K,
    Layers,
    Heads,
}

impl Grid {
    fn name(self) -> &'static str {
        match self {
            Grid::Models => "models",
            Grid::K => "k",
            Grid::Layers => "layers",
            Grid::Heads => "heads",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub params: usize,
    /// Wall-clock seconds.
    pub runtime: f64,
    pub split_hash: String,
    /// `ok` or the error message.
    pub status: String,
}

/// One cell per grid value, all on the same split; failed cells are
/// recorded and the grid continues.
pub fn cmd_ablate(cfg: &RunConfig, grid: Grid, values: &[usize]) -> Result<Vec<AblationRow>> {
    let mut cfg = cfg.clone();
    let bags = load_dataset(&mut cfg)?;
    let split = stratified_split(&labels(&bags), cfg.train.split_ratio, cfg.train.seed)?;
    let hash = split.hash_hex();
    let mut graphs: BTreeMap<usize, Vec<Sample<f64>>> = BTreeMap::new();
    let cells: Vec<(String, RunConfig)> = match grid {
        Grid::Models => [
            (ConvKind::Gat, PoolKind::Sag),
            (ConvKind::Gat, PoolKind::TopK),
            (ConvKind::Gcn, PoolKind::Sag),
            (ConvKind::Gcn, PoolKind::TopK),
        ]
        .into_iter()
        .map(|(conv, pool)| {
            let mut c = cfg.clone();
            c.model.conv = conv;
            c.model.pool = pool;
            (c.model.variant_name(), c)
        })
        .collect(),
        Grid::K | Grid::Layers | Grid::Heads => values
            .iter()
            .map(|&v| {
                let mut c = cfg.clone();
                match grid {
                    Grid::K => c.k = v,
                    Grid::Layers => c.model.num_blocks = v,
                    _ => c.model.heads = v,
                }
                (format!("{}={v}", grid.name()), c)
            })
            .collect(),
    };
    let mut rows = Vec::with_capacity(cells.len());
    for (variant, cell) in cells {
        let start = Instant::now();
        let params = param_layout(&cell.model).iter().map(|s| s.numel()).sum();
        let result = (|| -> Result<TrainOutcome<f64>> {
            cell.validate()?;
            if !graphs.contains_key(&cell.k) {
                graphs.insert(cell.k, build_samples(&bags, cell.k)?);
            }
            Ok(train(&graphs[&cell.k], &split, &cell.model, &cell.train)?)
        })();
        let runtime = start.elapsed().as_secs_f64();
        let row = match result {
            Ok(o) => AblationRow {
                variant,
                f1: Some(o.best.report.f1),
                auc: o.best.report.auc,
                params,
                runtime,
                split_hash: hash.clone(),
                status: "ok".into(),
            },
            Err(e) => AblationRow {
                variant,
                f1: None,
                auc: None,
                params,
                runtime,
                split_hash: hash.clone(),
                status: format!("error: {e:#}"),
            },
        };
        rows.push(row);
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.variant.clone(),
                opt(r.f1),
                opt(r.auc),
                r.params.to_string(),
                format!("{:.3}", r.runtime),
                r.split_hash.clone(),
                r.status.clone(),
            ]
        })
        .collect();
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    write_csv(
        &cfg.out.join(format!("ablation_{}.csv", grid.name())),
        &["variant", "f1", "auc", "params", "runtime", "split_hash", "status"],
        &table,
    )?;
    cfg.write(&cfg.out.join(format!("ablation_{}_config.json", grid.name())))?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRow {
    pub n: usize,
    pub k: usize,
    pub estimate: ResourceEstimate,
}

/// Least-squares line through `(x, y)`: slope, intercept and R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Resource estimate for each `k`, written to `estimate.csv` and
/// `estimate.svg`.
pub fn cmd_estimate(n: usize, ks: &[usize], model: &ModelConfig, out: &Path) -> Result<Vec<EstimateRow>> {
    model.validate()?;
    let rows: Vec<EstimateRow> = ks.iter().map(|&k| EstimateRow { n, k, estimate: resource_estimate(n, k, model) }).collect();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let e = &r.estimate;
            vec![
                r.n.to_string(),
                r.k.to_string(),
                e.flops.to_string(),
                e.edge_flops.to_string(),
                e.dense_flops.to_string(),
                e.node_flops.to_string(),
                e.fixed_flops.to_string(),
                e.activations.to_string(),
                e.peak_bytes.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("estimate.csv"),
        &["n", "k", "flops", "edge_flops", "dense_flops", "node_flops", "fixed_flops", "activations", "peak_bytes"],
        &table,
    )?;
    let gflops: Vec<(f64, f64)> = rows.iter().map(|r| (r.k as f64, r.estimate.flops as f64 / 1e9)).collect();
    let mib: Vec<(f64, f64)> = rows.iter().map(|r| (r.k as f64, r.estimate.peak_bytes as f64 / (1 << 20) as f64)).collect();
    write_line_chart(&out.join("estimate.svg"), &format!("Forward cost at N = {n}"), "k", "GFLOP / MiB", &[("GFLOP", &gflops), ("peak MiB", &mib)])?;
    write_json(&out.join("estimate_config.json"), &serde_json::json!({ "n": n, "k": ks, "model": model }))?;
    Ok(rows)
}
