//! The layer zoo: forward and backward passes for everything the two
//! autoencoder architectures need.
//!
//! Each layer owns its parameters, their gradients, and the forward cache the
//! backward pass consumes. A layer is single-owner during training; calling
//! `backward` without a fresh `forward` is a state error.

mod activation;
mod conv;
mod dense;
mod imcol;
mod pool;
mod reshape;
mod tconv;

pub use activation::{ActKind, Activation};
pub use conv::Conv2D;
pub use dense::Dense;
pub use pool::MaxPool2D;
pub use reshape::{Flatten, Reshape};
pub use tconv::TConv2D;

use crate::error::Result;
use crate::tensor::{Scalar, Tensor};

/// Glorot-uniform initialization limit √(6/(fan_in + fan_out)).
pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// One trainable parameter tensor paired with its current gradient.
pub struct ParamSlot<'a, T> {
    pub value: &'a mut Tensor<T>,
    pub grad: &'a Tensor<T>,
}

/// A single stage of a model, dispatched by kind.
#[derive(Debug, Clone)]
pub enum Layer<T> {
    Dense(Dense<T>),
    Conv2D(Conv2D<T>),
    MaxPool2D(MaxPool2D),
    TConv2D(TConv2D<T>),
    Activation(Activation<T>),
    Flatten(Flatten),
    Reshape(Reshape),
}

impl<T: Scalar> Layer<T> {
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv2D(l) => l.forward(x),
            Layer::MaxPool2D(l) => l.forward(x),
            Layer::TConv2D(l) => l.forward(x),
            Layer::Activation(l) => l.forward(x),
            Layer::Flatten(l) => l.forward(x),
            Layer::Reshape(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Dense(l) => l.backward(grad_out),
            Layer::Conv2D(l) => l.backward(grad_out),
            Layer::MaxPool2D(l) => l.backward(grad_out),
            Layer::TConv2D(l) => l.backward(grad_out),
            Layer::Activation(l) => l.backward(grad_out),
            Layer::Flatten(l) => l.backward(grad_out),
            Layer::Reshape(l) => l.backward(grad_out),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Dense(l) => l.param_count(),
            Layer::Conv2D(l) => l.param_count(),
            Layer::TConv2D(l) => l.param_count(),
            Layer::MaxPool2D(_) | Layer::Activation(_) | Layer::Flatten(_) | Layer::Reshape(_) => 0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2D(_) => "conv2d",
            Layer::MaxPool2D(_) => "maxpool2d",
            Layer::TConv2D(_) => "tconv2d",
            Layer::Activation(a) => a.kind().name(),
            Layer::Flatten(_) => "flatten",
            Layer::Reshape(_) => "reshape",
        }
    }

    /// Trainable (value, gradient) pairs; empty for non-parametric layers.
    pub fn param_slots(&mut self) -> Vec<ParamSlot<'_, T>> {
        match self {
            Layer::Dense(l) => l
                .params_mut()
                .into_iter()
                .map(|(value, grad)| ParamSlot { value, grad })
                .collect(),
            Layer::Conv2D(l) => l
                .params_mut()
                .into_iter()
                .map(|(value, grad)| ParamSlot { value, grad })
                .collect(),
            Layer::TConv2D(l) => l
                .params_mut()
                .into_iter()
                .map(|(value, grad)| ParamSlot { value, grad })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Mutable access to the parameter tensors alone (checkpoint loading,
    /// finite-difference probes).
    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Dense(l) => l.param_tensors_mut().into(),
            Layer::Conv2D(l) => l.param_tensors_mut().into(),
            Layer::TConv2D(l) => l.param_tensors_mut().into(),
            _ => Vec::new(),
        }
    }

    /// Per-sample output shape given a per-sample input shape.
    pub fn output_shape(&self, in_shape: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Dense(l) => {
                if in_shape == [l.in_dim()] {
                    Ok(vec![l.out_dim()])
                } else {
                    Err(crate::error::Error::shape("dense", in_shape, &[l.in_dim()]))
                }
            }
            Layer::Conv2D(l) => l.output_shape(in_shape),
            Layer::MaxPool2D(l) => l.output_shape(in_shape),
            Layer::TConv2D(l) => l.output_shape(in_shape),
            Layer::Activation(_) => Ok(in_shape.to_vec()),
            Layer::Flatten(l) => l.output_shape(in_shape),
            Layer::Reshape(l) => l.output_shape(in_shape),
        }
    }

    /// Short human-readable description for model summaries.
    pub fn describe(&self) -> String {
        match self {
            Layer::Dense(l) => format!("dense {}->{}", l.in_dim(), l.out_dim()),
            Layer::Conv2D(l) => format!(
                "conv2d {}x{}x{}->{} s{}",
                l.k(),
                l.k(),
                l.in_ch(),
                l.out_ch(),
                l.stride()
            ),
            Layer::MaxPool2D(_) => "maxpool2d 2x2 s2".to_string(),
            Layer::TConv2D(l) => format!(
                "tconv2d {}x{}x{}->{} s{}",
                l.k(),
                l.k(),
                l.in_ch(),
                l.out_ch(),
                l.stride()
            ),
            Layer::Activation(a) => a.kind().name().to_string(),
            Layer::Flatten(_) => "flatten".to_string(),
            Layer::Reshape(r) => {
                let dims: Vec<String> = r.target().iter().map(|d| d.to_string()).collect();
                format!("reshape {}", dims.join("x"))
            }
        }
    }
}
