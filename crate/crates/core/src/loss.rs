//! Training objectives: binary crossentropy (the training default) and mean
//! squared error. Both return the scalar loss and its gradient with respect
//! to the prediction, averaged over every element of the batch.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Predictions inside BCE are clamped to [EPS, 1−EPS] before the logs.
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Bce,
    Mse,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Mse => "mse",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(LossKind::Bce),
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::Argument(format!(
                "unknown loss {other:?}, expected \"bce\" or \"mse\""
            ))),
        }
    }
}

/// Scalar loss plus its per-element gradient, shaped like the prediction.
#[derive(Debug, Clone)]
pub struct LossValue<T> {
    pub value: T,
    pub grad: Tensor<T>,
}

pub fn compute<T: Scalar>(
    kind: LossKind,
    pred: &Tensor<T>,
    target: &Tensor<T>,
) -> Result<LossValue<T>> {
    match kind {
        LossKind::Bce => bce(pred, target),
        LossKind::Mse => mse(pred, target),
    }
}

/// Mean over all elements of (pred − target)²; gradient 2(pred − target)/N.
pub fn mse<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<LossValue<T>> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("mse", pred.shape(), target.shape()));
    }
    let n = pred.len() as f64;
    let inv_n = T::from_f64(1.0 / n);
    let two = T::from_f64(2.0);

    let mut acc = 0.0f64;
    let mut grad = vec![T::zero(); pred.len()];
    for ((g, &p), &t) in grad.iter_mut().zip(pred.data()).zip(target.data()) {
        let diff = p - t;
        acc += diff.as_f64() * diff.as_f64();
        *g = two * diff * inv_n;
    }
    Ok(LossValue {
        value: T::from_f64(acc / n),
        grad: Tensor::from_vec(pred.shape(), grad)?,
    })
}

/// Mean over all elements of −[t·ln(p) + (1−t)·ln(1−p)] with p clamped to
/// [1e-7, 1−1e-7]; gradient (p − t)/(p(1−p)N) on the clamped value.
pub fn bce<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<LossValue<T>> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("bce", pred.shape(), target.shape()));
    }
    let n = pred.len() as f64;
    let inv_n = T::from_f64(1.0 / n);
    let lo = T::from_f64(BCE_CLAMP);
    let hi = T::from_f64(1.0 - BCE_CLAMP);
    let one = T::one();

    let mut acc = 0.0f64;
    let mut grad = vec![T::zero(); pred.len()];
    for ((g, &p), &t) in grad.iter_mut().zip(pred.data()).zip(target.data()) {
        let p = p.max(lo).min(hi);
        acc -= t.as_f64() * p.as_f64().ln() + (1.0 - t.as_f64()) * (1.0 - p.as_f64()).ln();
        *g = (p - t) / (p * (one - p)) * inv_n;
    }
    Ok(LossValue {
        value: T::from_f64(acc / n),
        grad: Tensor::from_vec(pred.shape(), grad)?,
    })
}
