use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mustang::model::{ConvKind, ModelConfig, PoolKind};
use mustang::train::TrainConfig;
use serde::{Deserialize, Serialize};

/// Everything a run needs; written as `config.json` next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    /// Out-degree of the k-NN graph.
    pub k: usize,
    pub stain: Option<String>,
    pub out: PathBuf,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            k: 5,
            stain: None,
            out: PathBuf::from("out"),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }

    pub fn manifest(&self) -> Result<&Path> {
        self.manifest.as_deref().context("no dataset given; pass --manifest or set it in --config")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        mustang::util::write_atomic(path, text.as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvArg {
    Gat,
    Gcn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolArg {
    Sag,
    Topk,
}

impl From<ConvArg> for ConvKind {
    fn from(c: ConvArg) -> Self {
        match c {
            ConvArg::Gat => ConvKind::Gat,
            ConvArg::Gcn => ConvKind::Gcn,
        }
    }
}

impl From<PoolArg> for PoolKind {
    fn from(p: PoolArg) -> Self {
        match p {
            PoolArg::Sag => PoolKind::Sag,
            PoolArg::Topk => PoolKind::TopK,
        }
    }
}

/// Run flags. Each one overrides the value from `--config`; unset flags
/// keep the file's value, or the default shown.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run config; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset manifest (JSON)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Neighbours per node in the k-NN graph [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for initialization, shuffling and the split [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training epochs [default: 50]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate [default: 0.0001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Train share of the stratified split [default: 0.7]
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Pooling ratio, fraction of nodes kept per block [default: 0.8]
    #[arg(long)]
    pub pooling_ratio: Option<f64>,
    /// Attention heads per GAT layer [default: 2]
    #[arg(long)]
    pub heads: Option<usize>,
    /// Conv/pool blocks [default: 4]
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Hidden width of the conv layers [default: 384]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Conv layer [default: gat]
    #[arg(long, value_enum)]
    pub conv: Option<ConvArg>,
    /// Pooling layer [default: sag]
    #[arg(long, value_enum)]
    pub pool: Option<PoolArg>,
    /// Keep only rows of this stain
    #[arg(long)]
    pub stain: Option<String>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    /// Config file (or defaults) with the given flags applied, validated.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v.into();
                }
            };
        }
        if let Some(m) = &self.manifest {
            cfg.manifest = Some(m.clone());
        }
        if let Some(s) = &self.stain {
            cfg.stain = Some(s.clone());
        }
        set!(cfg.k, self.k);
        set!(cfg.out, self.out);
        set!(cfg.train.seed, self.seed);
        set!(cfg.train.epochs, self.epochs);
        set!(cfg.train.lr, self.lr);
        set!(cfg.train.split_ratio, self.ratio);
        set!(cfg.model.pooling_ratio, self.pooling_ratio);
        set!(cfg.model.heads, self.heads);
        set!(cfg.model.num_blocks, self.blocks);
        set!(cfg.model.hidden_dim, self.hidden);
        set!(cfg.model.conv, self.conv);
        set!(cfg.model.pool, self.pool);
        cfg.validate()?;
        Ok(cfg)
    }
}
