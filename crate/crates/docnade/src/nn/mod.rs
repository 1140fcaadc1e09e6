//! Shared numerical kernel: activations, parameter tensors, optimizers and
//! a finite-difference gradient oracle.

pub mod gradcheck;
pub mod optim;
pub mod tensor;

pub use gradcheck::{gradcheck, GradCheckReport};
pub use optim::{Adam, Optimizer, Sgd};
pub use tensor::{init_params, InitScheme, ParamTensor, Parameterized, Shape};

use crate::{Error, Result};

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed in terms of the activation output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn apply_in_place(self, xs: &mut [f64]) {
        for x in xs {
            *x = self.apply(*x);
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Elementwise activation with input validation.
pub fn activation(kind: Activation, xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("activation input".into()));
    }
    Ok(xs.iter().map(|&x| kind.apply(x)).collect())
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 36.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// `ln sigmoid(x)`, stable for large negative `x`.
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln Σ e^x` with max subtraction.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln (1/n · Σ e^x)` with max subtraction.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "log_mean_exp of empty slice");
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

/// Replaces logits by their softmax, stabilized by max subtraction.
pub fn softmax_in_place(xs: &mut [f64]) {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

/// Replaces logits by their log-softmax.
pub fn log_softmax_in_place(xs: &mut [f64]) {
    let lse = log_sum_exp(xs);
    for x in xs.iter_mut() {
        *x -= lse;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetry_points() {
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
    }

    #[test]
    fn sigmoid_complement_identity() {
        for x in [-30.0, -3.5, -0.1, 0.0, 0.7, 12.0] {
            assert!((sigmoid(-x) - (1.0 - sigmoid(x))).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_extremes_do_not_overflow() {
        assert_eq!(sigmoid(500.0), 1.0);
        assert_eq!(sigmoid(700.0), 1.0);
        assert!(sigmoid(-700.0) >= 0.0);
        assert!(sigmoid(-700.0) < 1e-300);
    }

    #[test]
    fn log_sigmoid_is_finite_far_out() {
        assert!((log_sigmoid(-745.0) + 745.0).abs() < 1e-9);
        assert!(log_sigmoid(745.0).abs() < 1e-300);
    }

    #[test]
    fn activation_rejects_non_finite() {
        assert!(activation(Activation::Sigmoid, &[0.0, f64::NAN]).is_err());
        assert!(activation(Activation::Tanh, &[f64::INFINITY]).is_err());
    }

    #[test]
    fn log_mean_exp_matches_naive_on_small_inputs() {
        let xs = [0.3, -1.2, 2.0];
        let naive = (xs.iter().copied().map(f64::exp).sum::<f64>() / 3.0).ln();
        assert!((log_mean_exp(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn log_mean_exp_is_stable_at_large_magnitudes() {
        let xs = [-1200.0, -1201.0, -1199.5];
        let got = log_mean_exp(&xs);
        assert!(got.is_finite());
        // Shift-invariance against the same values near zero.
        let shifted = log_mean_exp(&[0.0, -1.0, 0.5]);
        assert!((got - (shifted - 1200.0)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn log_mean_exp_dominates_mean(xs in prop::collection::vec(-50.0f64..50.0, 1..20)) {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!(log_mean_exp(&xs) >= mean - 1e-12);
        }

        #[test]
        fn softmax_normalizes(xs in prop::collection::vec(-30.0f64..30.0, 1..40)) {
            let mut p = xs.clone();
            softmax_in_place(&mut p);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}
