//! Command-line pipeline: dataset generation, graph analysis, training,
//! evaluation, ablation grids and cost estimates.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mustang::data::SyntheticConfig;

pub use commands::*;
pub use config::{ConvArg, PoolArg, RunArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "mustang", version, about = "Patient-level classification over k-NN patch graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic embedding dataset and its manifest
    Generate(GenerateArgs),
    /// Build per-patient k-NN graphs and report their structure
    BuildGraph(BuildGraphArgs),
    /// Train a model and write checkpoints, history, metrics and curves
    Train(RunArgs),
    /// Score a checkpoint on the run's split
    Evaluate(EvaluateArgs),
    /// Train every cell of an ablation grid on one shared split
    Ablate(AblateArgs),
    /// Analytic FLOP and memory estimate over a sweep of k
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator settings (JSON); flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: data]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of patients [default: 40]
    #[arg(long)]
    pub patients: Option<usize>,
    /// Embedding width [default: 64]
    #[arg(long)]
    pub feature_dim: Option<usize>,
    /// Signal shift along the hidden direction [default: 4]
    #[arg(long)]
    pub separation: Option<f64>,
    /// Noise standard deviation [default: 1]
    #[arg(long)]
    pub noise: Option<f64>,
    /// Share of positive-bag patches carrying the signal [default: 0.2]
    #[arg(long)]
    pub signal_fraction: Option<f64>,
}

impl GenerateArgs {
    pub fn resolve(&self) -> Result<(PathBuf, SyntheticConfig)> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => SyntheticConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.patients {
            cfg.num_patients = v;
        }
        if let Some(v) = self.feature_dim {
            cfg.feature_dim = v;
        }
        if let Some(v) = self.separation {
            cfg.separation = v;
        }
        if let Some(v) = self.noise {
            cfg.noise = v;
        }
        if let Some(v) = self.signal_fraction {
            cfg.signal_fraction = v;
        }
        cfg.validate()?;
        Ok((self.out.clone().unwrap_or_else(|| PathBuf::from("data")), cfg))
    }
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Spring-layout iterations for the node table [default: 50]
    #[arg(long, default_value_t = 50)]
    pub layout_iterations: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Checkpoint to score; its model config replaces the run's
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Patients to score
    #[arg(long, value_enum, default_value_t = Subset::Test)]
    pub subset: Subset,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Which variable to sweep
    #[arg(long, value_enum, default_value_t = Grid::Models)]
    pub grid: Grid,
    /// k values for `--grid k`
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,10,20,50,100")]
    pub k_list: Vec<usize>,
    /// Block counts for `--grid layers`
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub layers_list: Vec<usize>,
    /// Head counts for `--grid heads`
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub heads_list: Vec<usize>,
}

impl AblateArgs {
    pub fn values(&self) -> &[usize] {
        match self.grid {
            Grid::Models => &[],
            Grid::K => &self.k_list,
            Grid::Layers => &self.layers_list,
            Grid::Heads => &self.heads_list,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Nodes in the bag
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Embedding width
    #[arg(long, default_value_t = 1024)]
    pub input_dim: usize,
    /// k values to sweep
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "5,10,15,20,25,30,35,40,45,50,55,60,65,70,75,80,85,90,95,100"
    )]
    pub k_list: Vec<usize>,
}

/// Runs one parsed command, printing a short report to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => {
            let (out, cfg) = args.resolve()?;
            let manifest = cmd_generate(&out, &cfg)?;
            println!("wrote {} patients to {}", cfg.num_patients, manifest.display());
        }
        Command::BuildGraph(args) => {
            let cfg = args.run.resolve()?;
            let summaries = cmd_build_graph(&cfg, args.layout_iterations)?;
            for s in &summaries {
                let st = &s.stats;
                let conn = if st.weakly_connected() { "weakly connected" } else { "disconnected" };
                println!(
                    "{}: N={} E={} components={} mixing={:.3} ({conn})",
                    s.patient, st.num_nodes, st.num_edges, st.components, st.mixing
                );
            }
            println!("summary: {}", cfg.out.join("summary.csv").display());
        }
        Command::Train(args) => {
            let run = cmd_train(&args.resolve()?)?;
            for h in &run.outcome.history {
                println!("epoch {:>3}  loss {:.6}  test F1 {:.4}  AUC {}", h.epoch, h.loss, h.f1, fmt_opt(h.auc));
            }
            let best = &run.outcome.best.report;
            let fin = &run.outcome.final_eval.report;
            println!(
                "best (paper protocol, epoch {}): F1 {:.4} AUC {} sens {:.4} spec {:.4}",
                run.outcome.best_epoch,
                best.f1,
                fmt_opt(best.auc),
                best.sensitivity,
                best.specificity
            );
            println!("final epoch: F1 {:.4} AUC {}", fin.f1, fmt_opt(fin.auc));
            println!("outputs in {}", run.config.out.display());
        }
        Command::Evaluate(args) => {
            let cfg = args.run.resolve()?;
            let eval = cmd_evaluate(&cfg, &args.checkpoint, args.subset)?;
            let r = &eval.report;
            println!(
                "{} patients: F1 {:.4} AUC {} sens {:.4} spec {:.4} (tp {} fp {} tn {} fn {})",
                eval.ids.len(),
                r.f1,
                fmt_opt(r.auc),
                r.sensitivity,
                r.specificity,
                r.tp,
                r.fp,
                r.tn,
                r.fn_
            );
        }
        Command::Ablate(args) => {
            let cfg = args.run.resolve()?;
            let rows = cmd_ablate(&cfg, args.grid, args.values())?;
            println!("variant,f1,auc,params,runtime,split_hash,status");
            for r in &rows {
                println!(
                    "{},{},{},{},{:.3},{},{}",
                    r.variant,
                    fmt_opt(r.f1),
                    fmt_opt(r.auc),
                    r.params,
                    r.runtime,
                    r.split_hash,
                    r.status
                );
            }
        }
        Command::Estimate(args) => {
            let mut cfg = args.run.resolve()?;
            cfg.model.input_dim = args.input_dim;
            let rows = cmd_estimate(args.n, &args.k_list, &cfg.model, &cfg.out)?;
            println!("k,gflops,peak_mib");
            for r in &rows {
                println!(
                    "{},{:.3},{:.1}",
                    r.k,
                    r.estimate.flops as f64 / 1e9,
                    r.estimate.peak_bytes as f64 / (1 << 20) as f64
                );
            }
            if rows.len() >= 2 {
                let xs: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
                let ys: Vec<f64> = rows.iter().map(|r| r.estimate.edge_flops).collect();
                let (slope, _, r2) = linear_fit(&xs, &ys);
                println!("edge FLOPs per unit k: {slope:.0} (R² {r2:.6})");
            }
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}
