use crate::autodiff::{Activation, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Affine layer `x·W + b` with `W [d_in×d_out]`, `b [d_out]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub weight: Var,
    pub bias: Var,
}

/// Affine layers with `activation` between them; the last layer is linear.
pub fn mlp_forward<T: Scalar>(
    tape: &mut Tape<T>,
    input: Var,
    layers: &[Dense],
    activation: Activation,
) -> Result<Var> {
    if layers.is_empty() {
        return Err(Error::Config("MLP needs at least one layer".into()));
    }
    let d = tape.value(input).numel();
    let mut h = tape.reshape(input, vec![1, d])?;
    for (i, layer) in layers.iter().enumerate() {
        h = tape.matmul(h, layer.weight)?;
        h = tape.add_row(h, layer.bias)?;
        if i + 1 < layers.len() {
            h = tape.activation(h, activation);
        }
    }
    let out = tape.value(h).numel();
    tape.reshape(h, vec![out])
}
