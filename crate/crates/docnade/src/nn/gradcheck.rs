//! Central finite-difference validation of analytic gradients.
//!
//! Every model's hand-derived backward pass is checked against this oracle;
//! it is the crate's main correctness gate for training code.

use rand::seq::index::sample;

use crate::nn::Parameterized;
use crate::seeding::rng_for;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub worst_coord: usize,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Compares the gradients already accumulated in `model`'s tensors against
/// central finite differences of `loss_fn`.
///
/// The caller is expected to zero the gradients and run one analytic backward
/// pass before calling this. `loss_fn` must be a pure function of the
/// parameter values; non-determinism is detected by evaluating it twice.
/// Tensors larger than `max_coords_per_tensor` are checked on a seeded
/// coordinate sample.
pub fn gradcheck<M, F>(
    model: &mut M,
    mut loss_fn: F,
    epsilon: f64,
    max_coords_per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport>
where
    M: Parameterized,
    F: FnMut(&M) -> f64,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::Config(format!(
            "gradcheck epsilon {epsilon} outside [1e-7, 1e-3]"
        )));
    }
    let first = loss_fn(model);
    let second = loss_fn(model);
    if first.to_bits() != second.to_bits() {
        return Err(Error::NonDeterministicLoss);
    }

    let analytic: Vec<Vec<f64>> = model.params().iter().map(|p| p.grad.clone()).collect();
    let names: Vec<String> = model.params().iter().map(|p| p.name.clone()).collect();

    let mut rng = rng_for(seed, "gradcheck", 0);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_tensor: String::new(),
        worst_coord: 0,
        coords_checked: 0,
    };

    for t in 0..analytic.len() {
        let len = analytic[t].len();
        let coords: Vec<usize> = if len <= max_coords_per_tensor {
            (0..len).collect()
        } else {
            let mut picked = sample(&mut rng, len, max_coords_per_tensor).into_vec();
            picked.sort_unstable();
            picked
        };
        for i in coords {
            let original = model.params()[t].values[i];
            model.params_mut()[t].values[i] = original + epsilon;
            let plus = loss_fn(model);
            model.params_mut()[t].values[i] = original - epsilon;
            let minus = loss_fn(model);
            model.params_mut()[t].values[i] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let exact = analytic[t][i];
            let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8);
            report.coords_checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_tensor = names[t].clone();
                report.worst_coord = i;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ParamTensor, Shape};
    use std::cell::Cell;

    struct Quadratic {
        theta: ParamTensor,
    }

    impl Parameterized for Quadratic {
        fn params(&self) -> Vec<&ParamTensor> {
            vec![&self.theta]
        }
        fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
            vec![&mut self.theta]
        }
    }

    #[test]
    fn quadratic_loss_checks_out() {
        // loss = ½ Σ θ², gradient θ.
        let mut model = Quadratic {
            theta: ParamTensor::from_values("theta", Shape::Vector(3), vec![3.0, -1.0, 0.5])
                .unwrap(),
        };
        model.theta.grad = model.theta.values.clone();
        let report = gradcheck(
            &mut model,
            |m| 0.5 * m.theta.values.iter().map(|v| v * v).sum::<f64>(),
            1e-5,
            usize::MAX,
            0,
        )
        .unwrap();
        assert!(report.passes(1e-6), "rel error {}", report.max_rel_error);
        assert_eq!(report.coords_checked, 3);
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut model = Quadratic {
            theta: ParamTensor::from_values("theta", Shape::Vector(1), vec![2.0]).unwrap(),
        };
        model.theta.grad = vec![5.0]; // true gradient is 2.0
        let report = gradcheck(
            &mut model,
            |m| 0.5 * m.theta.values[0] * m.theta.values[0],
            1e-5,
            usize::MAX,
            0,
        )
        .unwrap();
        assert!(!report.passes(1e-4));
    }

    #[test]
    fn rejects_non_deterministic_loss() {
        let mut model = Quadratic {
            theta: ParamTensor::zeros("theta", Shape::Vector(1)),
        };
        let calls = Cell::new(0u32);
        let err = gradcheck(
            &mut model,
            |_| {
                calls.set(calls.get() + 1);
                calls.get() as f64
            },
            1e-5,
            usize::MAX,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonDeterministicLoss));
    }

    #[test]
    fn rejects_out_of_range_epsilon() {
        let mut model = Quadratic {
            theta: ParamTensor::zeros("theta", Shape::Vector(1)),
        };
        assert!(gradcheck(&mut model, |_| 0.0, 1e-2, usize::MAX, 0).is_err());
        assert!(gradcheck(&mut model, |_| 0.0, 1e-8, usize::MAX, 0).is_err());
    }

    #[test]
    fn coordinate_sampling_caps_work() {
        let mut model = Quadratic {
            theta: ParamTensor::from_values("theta", Shape::Vector(10), vec![1.0; 10]).unwrap(),
        };
        model.theta.grad = vec![1.0; 10];
        let report = gradcheck(
            &mut model,
            |m| m.theta.values.iter().sum::<f64>(),
            1e-5,
            4,
            1,
        )
        .unwrap();
        assert_eq!(report.coords_checked, 4);
        assert!(report.passes(1e-6));
    }
}
