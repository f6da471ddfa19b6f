//! Elementwise activations: ReLU for hidden layers, sigmoid for outputs.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActKind {
    Relu,
    Sigmoid,
}

impl ActKind {
    pub fn name(self) -> &'static str {
        match self {
            ActKind::Relu => "relu",
            ActKind::Sigmoid => "sigmoid",
        }
    }
}

/// ReLU caches its input; sigmoid caches its output (the gradient only
/// needs y·(1−y)).
#[derive(Debug, Clone)]
pub struct Activation<T> {
    kind: ActKind,
    cache: Option<Tensor<T>>,
}

/// Numerically stable sigmoid, clamped into the open interval (0, 1) so that
/// extreme inputs cannot saturate to exactly 0 or 1.
fn sigmoid<T: Scalar>(t: T) -> T {
    let one = T::one();
    let y = if t >= T::zero() {
        one / (one + (-t).exp())
    } else {
        let e = t.exp();
        e / (one + e)
    };
    let lo = T::min_positive_value();
    let hi = one - T::epsilon() / (one + one);
    y.max(lo).min(hi)
}

impl<T: Scalar> Activation<T> {
    pub fn new(kind: ActKind) -> Self {
        Self { kind, cache: None }
    }

    pub fn kind(&self) -> ActKind {
        self.kind
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self.kind {
            ActKind::Relu => {
                let y = x.map(|t| t.max(T::zero()));
                self.cache = Some(x.clone());
                Ok(y)
            }
            ActKind::Sigmoid => {
                let y = x.map(sigmoid);
                self.cache = Some(y.clone());
                Ok(y)
            }
        }
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let cached = self.cache.take().ok_or_else(|| {
            Error::State(format!("{} backward called without a forward", self.kind.name()))
        })?;
        match self.kind {
            // Gradient passes where the input was strictly positive; the
            // derivative at exactly 0 is defined as 0.
            ActKind::Relu => cached.zip(grad_out, |x, g| {
                if x > T::zero() {
                    g
                } else {
                    T::zero()
                }
            }),
            ActKind::Sigmoid => cached.zip(grad_out, |y, g| y * (T::one() - y) * g),
        }
    }
}
