use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::{ConvKind, ModelConfig, PoolKind};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{Dense, GatHead};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Uniform in `±√(6/(fan_in+fan_out))` over the first two dims.
    Glorot,
    Zeros,
}

/// Name, shape and initializer of one parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    fn new(name: String, shape: Vec<usize>, init: Init) -> Self {
        ParamSpec { name, shape, init }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn glorot_bound(&self) -> f64 {
        let fan_out = self.shape.get(1).copied().unwrap_or(1);
        (6.0 / (self.shape[0] + fan_out) as f64).sqrt()
    }
}

/// Every parameter array of the network, in storage order.
pub fn param_layout(cfg: &ModelConfig) -> Vec<ParamSpec> {
    let h = cfg.hidden_dim;
    let mut out = Vec::new();
    for b in 0..cfg.num_blocks {
        let fin = if b == 0 { cfg.input_dim } else { h };
        match cfg.conv {
            ConvKind::Gat => {
                for head in 0..cfg.heads {
                    let p = format!("block{b}.gat{head}");
                    out.push(ParamSpec::new(format!("{p}.weight"), vec![fin, h], Init::Glorot));
                    out.push(ParamSpec::new(format!("{p}.attention"), vec![2 * h, 1], Init::Glorot));
                }
            }
            ConvKind::Gcn => {
                out.push(ParamSpec::new(format!("block{b}.gcn.weight"), vec![fin, h], Init::Glorot));
            }
        }
        let pool = match cfg.pool {
            PoolKind::Sag => format!("block{b}.sag.theta"),
            PoolKind::TopK => format!("block{b}.topk.projection"),
        };
        out.push(ParamSpec::new(pool, vec![h, 1], Init::Glorot));
    }
    let dims = cfg.mlp_dims();
    for (i, w) in dims.windows(2).enumerate() {
        out.push(ParamSpec::new(format!("mlp{i}.weight"), vec![w[0], w[1]], Init::Glorot));
        out.push(ParamSpec::new(format!("mlp{i}.bias"), vec![w[1]], Init::Zeros));
    }
    out
}

/// Full weight set, stored flat in [`param_layout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    layout: Vec<ParamSpec>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> ModelParams<T> {
    /// Wraps `tensors`, checking them against the layout of `cfg`.
    pub fn from_tensors(cfg: &ModelConfig, tensors: Vec<Tensor<T>>) -> Result<Self> {
        cfg.validate()?;
        let layout = param_layout(cfg);
        if layout.len() != tensors.len() {
            return Err(Error::Dimension(format!(
                "expected {} parameter arrays, got {}",
                layout.len(),
                tensors.len()
            )));
        }
        for (spec, t) in layout.iter().zip(&tensors) {
            if spec.shape != t.shape() {
                return Err(Error::Dimension(format!(
                    "{} has shape {:?}, expected {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
        }
        Ok(ModelParams { layout, tensors })
    }

    pub fn layout(&self) -> &[ParamSpec] {
        &self.layout
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn into_tensors(self) -> Vec<Tensor<T>> {
        self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.layout.iter().position(|s| s.name == name).map(|i| &self.tensors[i])
    }

    pub fn total_param_count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            layout: self.layout.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    /// Records every array as a trainable leaf and returns typed handles.
    pub fn bind(&self, tape: &mut Tape<T>, cfg: &ModelConfig) -> Result<BoundModel> {
        if param_layout(cfg) != self.layout {
            return Err(Error::Config("parameters do not match the model config".into()));
        }
        let vars: Vec<Var> = self.tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        BoundModel::from_vars(cfg, vars)
    }

    /// Like [`ModelParams::bind`] but records constants, for inference.
    pub fn bind_frozen(&self, tape: &mut Tape<T>, cfg: &ModelConfig) -> Result<BoundModel> {
        if param_layout(cfg) != self.layout {
            return Err(Error::Config("parameters do not match the model config".into()));
        }
        let vars: Vec<Var> = self.tensors.iter().map(|t| tape.constant(t.clone())).collect();
        BoundModel::from_vars(cfg, vars)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundConv {
    Gat(Vec<GatHead>),
    Gcn(Var),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundBlock {
    pub conv: BoundConv,
    /// SAGPool `Θ [h×1]` or TopK projection `p [h×1]`.
    pub pool: Var,
}

/// Parameters recorded on a tape.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundModel {
    pub blocks: Vec<BoundBlock>,
    pub mlp: Vec<Dense>,
    /// All leaves in layout order.
    pub vars: Vec<Var>,
}

impl BoundModel {
    /// Typed view over leaves already recorded in [`param_layout`] order.
    pub fn from_vars(cfg: &ModelConfig, vars: Vec<Var>) -> Result<Self> {
        let expected = param_layout(cfg).len();
        if vars.len() != expected {
            return Err(Error::Config(format!(
                "expected {expected} parameter handles, got {}",
                vars.len()
            )));
        }
        let mut it = vars.iter().copied();
        let mut next = || it.next().expect("length checked");
        let mut blocks = Vec::with_capacity(cfg.num_blocks);
        for _ in 0..cfg.num_blocks {
            let conv = match cfg.conv {
                ConvKind::Gat => BoundConv::Gat(
                    (0..cfg.heads)
                        .map(|_| GatHead { weight: next(), attention: next() })
                        .collect(),
                ),
                ConvKind::Gcn => BoundConv::Gcn(next()),
            };
            blocks.push(BoundBlock { conv, pool: next() });
        }
        let mlp = (0..3).map(|_| Dense { weight: next(), bias: next() }).collect();
        Ok(BoundModel { blocks, mlp, vars })
    }
}

/// Glorot-uniform weights and zero biases, drawn in layout order from a
/// ChaCha8 stream seeded with `seed`.
pub fn init_params<T: Scalar>(cfg: &ModelConfig, seed: u64) -> Result<ModelParams<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors = param_layout(cfg)
        .iter()
        .map(|spec| match spec.init {
            Init::Zeros => Tensor::zeros(spec.shape.clone()),
            Init::Glorot => {
                let bound = spec.glorot_bound();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                let data = (0..spec.numel()).map(|_| T::of(dist.sample(&mut rng))).collect();
                Tensor::new(spec.shape.clone(), data).expect("layout shape")
            }
        })
        .collect();
    ModelParams::from_tensors(cfg, tensors)
}
