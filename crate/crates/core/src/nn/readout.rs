use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::scalar::Scalar;

/// Column-wise mean followed by column-wise max: `[N×F] → [2F]`.
pub fn readout<T: Scalar>(tape: &mut Tape<T>, x: Var) -> Result<Var> {
    let mean = tape.reduce_mean(x)?;
    let max = tape.reduce_max(x)?;
    tape.concat(&[mean, max], 0)
}
