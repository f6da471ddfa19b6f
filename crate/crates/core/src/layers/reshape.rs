//! Shape-only layers: flatten to a feature vector and reshape back to an
//! image. Both are exact inverses through the backward pass.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// [batch × d₀ × d₁ × …] → [batch × (d₀·d₁·…)].
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    cache: Option<Vec<usize>>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.shape().len() < 2 {
            return Err(Error::shape("flatten", x.shape(), &[0, 0]));
        }
        let n = x.shape()[0];
        let rest: usize = x.shape()[1..].iter().product();
        self.cache = Some(x.shape().to_vec());
        x.reshape(&[n, rest])
    }

    pub fn backward<T: Scalar>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self
            .cache
            .take()
            .ok_or_else(|| Error::State("flatten backward called without a forward".into()))?;
        grad_out.reshape(&shape)
    }

    pub fn output_shape(&self, in_shape: &[usize]) -> Result<Vec<usize>> {
        Ok(vec![in_shape.iter().product()])
    }
}

/// [batch × …] → [batch × target…], element counts agreeing per sample.
#[derive(Debug, Clone)]
pub struct Reshape {
    target: Vec<usize>,
    cache: Option<Vec<usize>>,
}

impl Reshape {
    pub fn new(per_sample_shape: &[usize]) -> Self {
        Self {
            target: per_sample_shape.to_vec(),
            cache: None,
        }
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let n = x.shape()[0];
        let mut shape = vec![n];
        shape.extend_from_slice(&self.target);
        self.cache = Some(x.shape().to_vec());
        x.reshape(&shape)
    }

    pub fn backward<T: Scalar>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self
            .cache
            .take()
            .ok_or_else(|| Error::State("reshape backward called without a forward".into()))?;
        grad_out.reshape(&shape)
    }

    pub fn output_shape(&self, in_shape: &[usize]) -> Result<Vec<usize>> {
        let n: usize = in_shape.iter().product();
        let m: usize = self.target.iter().product();
        if n != m {
            return Err(Error::shape("reshape", in_shape, &self.target));
        }
        Ok(self.target.clone())
    }
}
