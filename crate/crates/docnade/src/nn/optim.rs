//! Stochastic gradient descent and Adam.

use std::collections::HashMap;

use crate::nn::ParamTensor;
use crate::{Error, Result};

/// Plain SGD: `θ ← θ − lr · g`.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub learning_rate: f64,
}

impl Sgd {
    pub fn new(learning_rate: f64) -> Self {
        Sgd { learning_rate }
    }

    pub fn step(&self, params: &mut [&mut ParamTensor]) -> Result<()> {
        for p in params.iter_mut() {
            p.assert_finite()?;
            for (v, &g) in p.values.iter_mut().zip(&p.grad) {
                *v -= self.learning_rate * g;
            }
        }
        Ok(())
    }
}

struct Moments {
    first: Vec<f64>,
    second: Vec<f64>,
}

/// Adam with bias correction. Moment estimates are kept per tensor name; the
/// step count increments once per `step` call.
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    moments: HashMap<String, Moments>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam::with_hyperparams(learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparams(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        assert!((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2));
        assert!(epsilon > 0.0);
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step_count: 0,
            moments: HashMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn step(&mut self, params: &mut [&mut ParamTensor]) -> Result<()> {
        self.step_count += 1;
        let correction1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let correction2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for p in params.iter_mut() {
            p.assert_finite()?;
            let m = self
                .moments
                .entry(p.name.clone())
                .or_insert_with(|| Moments {
                    first: vec![0.0; p.len()],
                    second: vec![0.0; p.len()],
                });
            if m.first.len() != p.len() {
                return Err(Error::ShapeMismatch {
                    name: p.name.clone(),
                    expected: format!("{} moment entries", m.first.len()),
                    got: format!("{} values", p.len()),
                });
            }
            for i in 0..p.len() {
                let g = p.grad[i];
                m.first[i] = self.beta1 * m.first[i] + (1.0 - self.beta1) * g;
                m.second[i] = self.beta2 * m.second[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m.first[i] / correction1;
                let v_hat = m.second[i] / correction2;
                p.values[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

pub enum Optimizer {
    Sgd(Sgd),
    Adam(Adam),
}

impl Optimizer {
    pub fn step(&mut self, params: &mut [&mut ParamTensor]) -> Result<()> {
        match self {
            Optimizer::Sgd(s) => s.step(params),
            Optimizer::Adam(a) => a.step(params),
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match self {
            Optimizer::Sgd(s) => s.learning_rate,
            Optimizer::Adam(a) => a.learning_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Shape;
    use proptest::prelude::*;

    fn tensor(values: Vec<f64>, grad: Vec<f64>) -> ParamTensor {
        let mut t = ParamTensor::from_values("t", Shape::Vector(values.len()), values).unwrap();
        t.grad = grad;
        t
    }

    #[test]
    fn sgd_definition() {
        let mut t = tensor(vec![1.0], vec![2.0]);
        Sgd::new(0.1).step(&mut [&mut t]).unwrap();
        assert!((t.values[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sgd_zero_gradient_is_fixed_point() {
        let mut t = tensor(vec![3.5, -2.0], vec![0.0, 0.0]);
        Sgd::new(0.7).step(&mut [&mut t]).unwrap();
        assert_eq!(t.values, vec![3.5, -2.0]);
    }

    #[test]
    fn sgd_steps_compose_linearly() {
        let mut t = tensor(vec![1.0], vec![0.25]);
        let sgd = Sgd::new(0.1);
        sgd.step(&mut [&mut t]).unwrap();
        t.grad = vec![0.5];
        sgd.step(&mut [&mut t]).unwrap();
        assert!((t.values[0] - (1.0 - 0.1 * (0.25 + 0.5))).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_closed_form() {
        // After one step: m_hat = g, v_hat = g^2, so Δθ ≈ -lr·sign(g).
        let mut t = tensor(vec![0.0], vec![0.5]);
        let mut adam = Adam::new(1e-3);
        adam.step(&mut [&mut t]).unwrap();
        let expected = -1e-3 * 0.5 / (0.5 + 1e-8);
        assert!((t.values[0] - expected).abs() < 1e-12);
        assert!((t.values[0] + 1e-3).abs() < 1e-9);
    }

    #[test]
    fn adam_zero_gradient_never_moves() {
        let mut t = tensor(vec![1.25, -0.5], vec![0.0, 0.0]);
        let mut adam = Adam::new(0.01);
        for _ in 0..5 {
            adam.step(&mut [&mut t]).unwrap();
        }
        assert_eq!(t.values, vec![1.25, -0.5]);
    }

    #[test]
    fn adam_step_count_increments_once_per_call() {
        let mut a = tensor(vec![0.0], vec![1.0]);
        let mut b = tensor(vec![0.0], vec![1.0]);
        b.name = "u".into();
        let mut adam = Adam::new(0.1);
        adam.step(&mut [&mut a, &mut b]).unwrap();
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn adam_rejects_moment_shape_mismatch() {
        let mut t = tensor(vec![0.0, 0.0], vec![1.0, 1.0]);
        let mut adam = Adam::new(0.1);
        adam.step(&mut [&mut t]).unwrap();
        // Same name, different size: stale moments must be rejected.
        let mut shrunk = tensor(vec![0.0], vec![1.0]);
        assert!(matches!(
            adam.step(&mut [&mut shrunk]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn nan_gradient_is_a_hard_error() {
        let mut t = tensor(vec![0.0], vec![f64::NAN]);
        assert!(matches!(
            Sgd::new(0.1).step(&mut [&mut t]),
            Err(Error::NonFinite(_))
        ));
        let mut t = tensor(vec![0.0], vec![f64::INFINITY]);
        assert!(matches!(
            Adam::new(0.1).step(&mut [&mut t]),
            Err(Error::NonFinite(_))
        ));
    }

    proptest! {
        #[test]
        fn adam_first_step_opposes_gradient(g in -10.0f64..10.0) {
            prop_assume!(g.abs() > 1e-6);
            let mut t = tensor(vec![0.0], vec![g]);
            let mut adam = Adam::new(1e-3);
            adam.step(&mut [&mut t]).unwrap();
            prop_assert!(t.values[0].signum() == -g.signum());
        }

        #[test]
        fn steps_preserve_shape_and_finiteness(
            values in prop::collection::vec(-5.0f64..5.0, 1..16),
            grads in prop::collection::vec(-5.0f64..5.0, 1..16),
        ) {
            let n = values.len().min(grads.len());
            let mut t = tensor(values[..n].to_vec(), grads[..n].to_vec());
            let mut adam = Adam::new(0.05);
            adam.step(&mut [&mut t]).unwrap();
            prop_assert_eq!(t.values.len(), n);
            prop_assert!(t.values.iter().all(|v| v.is_finite()));
        }
    }
}
