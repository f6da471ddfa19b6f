//! Fully-connected layer: y = xWᵀ + b per batch row.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

use super::glorot_limit;

#[derive(Debug, Clone)]
pub struct Dense<T> {
    weights: Tensor<T>, // [out × in]
    bias: Tensor<T>,    // [out]
    grad_weights: Tensor<T>,
    grad_bias: Tensor<T>,
    cache: Option<Tensor<T>>, // input from the last forward, [batch × in]
}

impl<T: Scalar> Dense<T> {
    /// Glorot-uniform weights, zero bias.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let limit = glorot_limit(in_dim, out_dim);
        Self {
            weights: Tensor::uniform(rng, &[out_dim, in_dim], -limit, limit),
            bias: Tensor::zeros(&[out_dim]),
            grad_weights: Tensor::zeros(&[out_dim, in_dim]),
            grad_bias: Tensor::zeros(&[out_dim]),
            cache: None,
        }
    }

    /// Builds from explicit parameters (tests, checkpoint loading).
    pub fn from_params(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let [out_dim, in_dim] = weights.dims2("dense weights")?;
        if bias.shape() != [out_dim] {
            return Err(Error::shape("dense bias", bias.shape(), &[out_dim]));
        }
        Ok(Self {
            grad_weights: Tensor::zeros(&[out_dim, in_dim]),
            grad_bias: Tensor::zeros(&[out_dim]),
            weights,
            bias,
            cache: None,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn weights(&self) -> &Tensor<T> {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    pub(crate) fn params_mut(&mut self) -> [(&mut Tensor<T>, &Tensor<T>); 2] {
        [
            (&mut self.weights, &self.grad_weights),
            (&mut self.bias, &self.grad_bias),
        ]
    }

    pub(crate) fn param_tensors_mut(&mut self) -> [&mut Tensor<T>; 2] {
        [&mut self.weights, &mut self.bias]
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let [_, in_dim] = x.dims2("dense_forward")?;
        if in_dim != self.in_dim() {
            return Err(Error::shape("dense_forward", x.shape(), self.weights.shape()));
        }
        let mut y = x.matmul_nt(&self.weights)?;
        let out_dim = self.out_dim();
        let bias = self.bias.data();
        for row in y.data_mut().chunks_exact_mut(out_dim) {
            for (v, &b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
        self.cache = Some(x.clone());
        Ok(y)
    }

    /// grad_weights = grad_outᵀ·x, grad_bias = column sums, returns grad_out·W.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .cache
            .take()
            .ok_or_else(|| Error::State("dense backward called without a forward".into()))?;
        let [batch, out_dim] = grad_out.dims2("dense_backward")?;
        if out_dim != self.out_dim() || batch != x.shape()[0] {
            return Err(Error::shape("dense_backward", grad_out.shape(), x.shape()));
        }
        self.grad_weights = grad_out.matmul_tn(&x)?;
        self.grad_bias = grad_out.sum_axis0()?;
        grad_out.matmul(&self.weights)
    }
}
