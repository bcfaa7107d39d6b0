use super::{Tape, Var};
use crate::tensor::Tensor;

/// Central-difference step used by [`gradient_errors`].
pub const FD_STEP: f64 = 1e-5;

/// Gradient check of one input element.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientError {
    pub relative: f64,
    pub index: usize,
    pub analytic: f64,
    /// Central difference.
    pub numeric: f64,
    /// Backward one-sided difference.
    pub left: f64,
    /// Forward one-sided difference.
    pub right: f64,
}

impl GradientError {
    /// One-sided slopes disagree by more than `tol` (relative), i.e. the
    /// step straddles a point where the function is not differentiable.
    pub fn straddles_kink(&self, tol: f64, floor: f64) -> bool {
        (self.left - self.right).abs() / self.left.abs().max(self.right.abs()).max(floor) > tol
    }

    /// Relative error of the analytic value against the closer one-sided
    /// slope.
    pub fn one_sided_relative(&self, floor: f64) -> f64 {
        let rel = |n: f64| (self.analytic - n).abs() / self.analytic.abs().max(n.abs()).max(floor);
        rel(self.left).min(rel(self.right))
    }
}

/// Per input, the element with the largest relative error between the
/// analytic gradient and a central difference with step [`FD_STEP`].
///
/// `f` builds a scalar loss on a fresh tape from leaves created for `inputs`.
/// Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_errors(
    inputs: &[Tensor<f64>],
    floor: f64,
    f: impl Fn(&mut Tape<f64>, &[Var]) -> Var,
) -> Vec<GradientError> {
    gradient_checks(inputs, floor, f)
        .into_iter()
        .map(|checks| {
            checks.into_iter().fold(GradientError::default(), |w, e| if e.relative >= w.relative { e } else { w })
        })
        .collect()
}

/// Like [`gradient_errors`] but keeps every element.
pub fn gradient_checks(
    inputs: &[Tensor<f64>],
    floor: f64,
    f: impl Fn(&mut Tape<f64>, &[Var]) -> Var,
) -> Vec<Vec<GradientError>> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let loss = f(&mut tape, &vars);
    let grads = tape.backward(loss).expect("scalar loss");
    let base = tape.value(loss).data()[0];
    let mut work = inputs.to_vec();
    let eval = |work: &[Tensor<f64>]| {
        let mut tp = Tape::new();
        let vs: Vec<Var> = work.iter().map(|x| tp.leaf(x.clone())).collect();
        let l = f(&mut tp, &vs);
        tp.value(l).data()[0]
    };
    let mut out = Vec::with_capacity(inputs.len());
    for (i, x) in inputs.iter().enumerate() {
        let analytic = grads.get(vars[i]);
        let mut checks = Vec::with_capacity(x.numel());
        for j in 0..x.numel() {
            let orig = x.data()[j];
            work[i].data_mut()[j] = orig + FD_STEP;
            let up = eval(&work);
            work[i].data_mut()[j] = orig - FD_STEP;
            let down = eval(&work);
            work[i].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic.data()[j];
            let relative = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            checks.push(GradientError {
                relative,
                index: j,
                analytic: a,
                numeric,
                left: (base - down) / FD_STEP,
                right: (up - base) / FD_STEP,
            });
        }
        out.push(checks);
    }
    out
}
