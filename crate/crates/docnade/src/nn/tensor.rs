//! Dense named parameter tensors with gradient accumulators.

use rand::Rng;

use crate::{Error, Result};

/// Tensor shape: a vector or a row-major matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn describe(&self) -> String {
        match *self {
            Shape::Vector(n) => format!("({n})"),
            Shape::Matrix(r, c) => format!("{r}x{c}"),
        }
    }
}

/// A named parameter array and its same-shape gradient accumulator.
#[derive(Clone, Debug)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Shape,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(name: impl Into<String>, shape: Shape) -> Self {
        ParamTensor {
            name: name.into(),
            shape,
            values: vec![0.0; shape.len()],
            grad: vec![0.0; shape.len()],
        }
    }

    pub fn from_values(name: impl Into<String>, shape: Shape, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                name,
                expected: shape.describe(),
                got: format!("{} values", values.len()),
            });
        }
        let grad = vec![0.0; values.len()];
        Ok(ParamTensor {
            name,
            shape,
            values,
            grad,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rows(&self) -> usize {
        match self.shape {
            Shape::Vector(n) => n,
            Shape::Matrix(r, _) => r,
        }
    }

    pub fn cols(&self) -> usize {
        match self.shape {
            Shape::Vector(_) => 1,
            Shape::Matrix(_, c) => c,
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    /// Contiguous matrix row.
    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.cols();
        &self.values[row * c..(row + 1) * c]
    }

    #[inline]
    pub fn grad_row_mut(&mut self, row: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.grad[row * c..(row + 1) * c]
    }

    /// `out[r] += values[r, col]` for every row.
    pub fn add_col_to(&self, col: usize, out: &mut [f64]) {
        let c = self.cols();
        debug_assert_eq!(out.len(), self.rows());
        for (r, o) in out.iter_mut().enumerate() {
            *o += self.values[r * c + col];
        }
    }

    /// `out[r] += scale * values[r, col]` for every row.
    pub fn add_col_scaled_to(&self, col: usize, scale: f64, out: &mut [f64]) {
        let c = self.cols();
        debug_assert_eq!(out.len(), self.rows());
        for (r, o) in out.iter_mut().enumerate() {
            *o += scale * self.values[r * c + col];
        }
    }

    /// Copies out a (strided) matrix column.
    pub fn col_to_vec(&self, col: usize) -> Vec<f64> {
        let c = self.cols();
        (0..self.rows()).map(|r| self.values[r * c + col]).collect()
    }

    /// `grad[r, col] += delta[r]` for every row.
    pub fn add_to_col_grad(&mut self, col: usize, delta: &[f64]) {
        let c = self.cols();
        debug_assert_eq!(delta.len(), self.rows());
        for (r, &d) in delta.iter().enumerate() {
            self.grad[r * c + col] += d;
        }
    }

    /// `grad[r, col] += scale * delta[r]` for every row.
    pub fn add_to_col_grad_scaled(&mut self, col: usize, scale: f64, delta: &[f64]) {
        let c = self.cols();
        debug_assert_eq!(delta.len(), self.rows());
        for (r, &d) in delta.iter().enumerate() {
            self.grad[r * c + col] += scale * d;
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} values", self.name)));
        }
        if self.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("{} gradient", self.name)));
        }
        Ok(())
    }
}

/// Weight initialization schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    /// `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
    UniformFan,
    Zeros,
}

pub fn init_params(
    name: impl Into<String>,
    shape: Shape,
    scheme: InitScheme,
    rng: &mut impl Rng,
) -> ParamTensor {
    let mut tensor = ParamTensor::zeros(name, shape);
    if let InitScheme::UniformFan = scheme {
        let fan = match shape {
            Shape::Matrix(r, c) => r + c,
            Shape::Vector(n) => n + 1,
        };
        let a = (6.0 / fan as f64).sqrt();
        for v in &mut tensor.values {
            *v = rng.random_range(-a..a);
        }
    }
    tensor
}

/// Anything exposing an ordered list of named parameter tensors.
pub trait Parameterized {
    fn params(&self) -> Vec<&ParamTensor>;
    fn params_mut(&mut self) -> Vec<&mut ParamTensor>;

    fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_for;

    #[test]
    fn zeros_init_is_all_zero() {
        let mut rng = rng_for(1, "init", 0);
        let t = init_params("b", Shape::Vector(7), InitScheme::Zeros, &mut rng);
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_fan_bound() {
        let mut rng = rng_for(2, "init", 0);
        let t = init_params("w", Shape::Matrix(2, 8), InitScheme::UniformFan, &mut rng);
        let bound = (6.0f64 / 10.0).sqrt();
        assert!(t.values.iter().all(|v| v.abs() <= bound));
        assert!(t.values.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn same_seed_same_tensor() {
        let a = init_params(
            "w",
            Shape::Matrix(3, 5),
            InitScheme::UniformFan,
            &mut rng_for(9, "init", 0),
        );
        let b = init_params(
            "w",
            Shape::Matrix(3, 5),
            InitScheme::UniformFan,
            &mut rng_for(9, "init", 0),
        );
        assert_eq!(a.values, b.values);
        let c = init_params(
            "w",
            Shape::Matrix(3, 5),
            InitScheme::UniformFan,
            &mut rng_for(10, "init", 0),
        );
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn column_helpers_match_index_math() {
        let t =
            ParamTensor::from_values("w", Shape::Matrix(2, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
                .unwrap();
        assert_eq!(t.col_to_vec(1), vec![2.0, 5.0]);
        let mut acc = vec![10.0, 20.0];
        t.add_col_to(2, &mut acc);
        assert_eq!(acc, vec![13.0, 26.0]);
        assert_eq!(t.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn from_values_rejects_wrong_length() {
        assert!(ParamTensor::from_values("w", Shape::Matrix(2, 2), vec![0.0; 3]).is_err());
    }
}
