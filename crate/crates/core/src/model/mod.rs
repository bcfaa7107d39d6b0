//! The stacked attention/pooling network: configuration, parameters,
//! forward pass and an analytic cost model.

mod estimate;
mod forward;
mod params;

use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{Error, Result};

pub use estimate::{resource_estimate, ResourceEstimate};
pub use forward::{mustang_forward, positive_probability, BlockTrace, ForwardOutput};
pub use params::{
    init_params, param_layout, BoundBlock, BoundConv, BoundModel, Init, ModelParams, ParamSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvKind {
    Gat,
    Gcn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    Sag,
    TopK,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_blocks: usize,
    pub heads: usize,
    pub pooling_ratio: f64,
    pub conv: ConvKind,
    pub pool: PoolKind,
    /// Widths of the two hidden MLP layers.
    pub mlp_hidden: Vec<usize>,
    /// Applied to conv outputs and between MLP layers.
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 1024,
            hidden_dim: 384,
            num_blocks: 4,
            heads: 2,
            pooling_ratio: 0.8,
            conv: ConvKind::Gat,
            pool: PoolKind::Sag,
            mlp_hidden: vec![512, 128],
            activation: Activation::Relu,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return fail("input_dim and hidden_dim must be positive".into());
        }
        if self.num_blocks == 0 {
            return fail("num_blocks must be at least 1".into());
        }
        if self.heads == 0 {
            return fail("heads must be at least 1".into());
        }
        if !(self.pooling_ratio > 0.0 && self.pooling_ratio <= 1.0) {
            return fail(format!("pooling_ratio {} outside (0, 1]", self.pooling_ratio));
        }
        if self.mlp_hidden.len() != 2 || self.mlp_hidden.contains(&0) {
            return fail(format!(
                "mlp_hidden must hold two positive widths, got {:?}",
                self.mlp_hidden
            ));
        }
        Ok(())
    }

    /// Concatenated readout width: mean and max per block.
    pub fn readout_dim(&self) -> usize {
        2 * self.hidden_dim * self.num_blocks
    }

    /// Full MLP widths `[readout, hidden.., 2]`.
    pub fn mlp_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.readout_dim()];
        dims.extend(&self.mlp_hidden);
        dims.push(2);
        dims
    }

    /// Number of conv heads actually instantiated (GCN has a single weight).
    pub fn conv_heads(&self) -> usize {
        match self.conv {
            ConvKind::Gat => self.heads,
            ConvKind::Gcn => 1,
        }
    }

    pub fn variant_name(&self) -> String {
        let conv = match self.conv {
            ConvKind::Gat => "GAT",
            ConvKind::Gcn => "GCN",
        };
        let pool = match self.pool {
            PoolKind::Sag => "SAGPool",
            PoolKind::TopK => "TopK",
        };
        format!("{conv}+{pool}")
    }
}

#[cfg(test)]
mod tests;
