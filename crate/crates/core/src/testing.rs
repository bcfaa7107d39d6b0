//! Test-only oracles shared by unit tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{gradient_errors, Tape, Var};
use crate::tensor::Tensor;

pub fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn max_grad_error(inputs: &[Tensor<f64>], f: impl Fn(&mut Tape<f64>, &[Var]) -> Var) -> f64 {
    gradient_errors(inputs, 1e-8, f).iter().fold(0.0, |a, e| a.max(e.relative))
}

pub fn check_grad(inputs: &[Tensor<f64>], f: impl Fn(&mut Tape<f64>, &[Var]) -> Var, tol: f64) {
    let err = max_grad_error(inputs, f);
    assert!(err < tol, "max relative gradient error {err} ≥ {tol}");
}
