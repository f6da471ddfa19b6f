//! Finite-difference verification of analytic gradients.
//!
//! These helpers only ever call `forward` and the loss function, so they are
//! independent of the backward passes they are used to check. They are meant
//! to run on `f64` models; in `f32` the truncation error of the difference
//! quotient swamps the signal.

use crate::error::Result;
use crate::loss::{self, LossKind};
use crate::model::Model;
use crate::tensor::{Scalar, Tensor};

/// |a−b| / max(|a|, |b|, 1e-8).
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Worst relative error across parameter and input gradients.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_param_err: f64,
    pub max_input_err: f64,
}

impl GradCheckReport {
    pub fn max(&self) -> f64 {
        self.max_param_err.max(self.max_input_err)
    }
}

fn scalar_loss<T: Scalar>(
    model: &mut Model<T>,
    input: &Tensor<T>,
    target: &Tensor<T>,
    kind: LossKind,
) -> Result<f64> {
    let pred = model.forward(input)?;
    Ok(loss::compute(kind, &pred, target)?.value.as_f64())
}

/// Central-difference check of every parameter and input gradient of a model
/// against one analytic backward pass.
pub fn check_model<T: Scalar>(
    model: &mut Model<T>,
    input: &Tensor<T>,
    target: &Tensor<T>,
    kind: LossKind,
    step: f64,
) -> Result<GradCheckReport> {
    // One analytic pass; snapshot the gradients it produces.
    let pred = model.forward(input)?;
    let loss_value = loss::compute(kind, &pred, target)?;
    let analytic_input = model.backward(&loss_value.grad)?;
    let analytic_params: Vec<Tensor<T>> = model
        .param_slots()
        .iter()
        .map(|slot| slot.grad.clone())
        .collect();

    let h = T::from_f64(step);
    let mut max_param_err = 0.0f64;
    for (slot_idx, analytic) in analytic_params.iter().enumerate() {
        for i in 0..analytic.len() {
            let original = {
                let mut slots = model.param_slots();
                let v = slots[slot_idx].value.data()[i];
                slots[slot_idx].value.data_mut()[i] = v + h;
                v
            };
            let plus = scalar_loss(model, input, target, kind)?;
            {
                let mut slots = model.param_slots();
                slots[slot_idx].value.data_mut()[i] = original - h;
            }
            let minus = scalar_loss(model, input, target, kind)?;
            {
                let mut slots = model.param_slots();
                slots[slot_idx].value.data_mut()[i] = original;
            }
            let fd = (plus - minus) / (2.0 * step);
            max_param_err = max_param_err.max(relative_error(fd, analytic.data()[i].as_f64()));
        }
    }

    let mut max_input_err = 0.0f64;
    for i in 0..input.len() {
        let mut plus = input.clone();
        plus.data_mut()[i] = plus.data()[i] + h;
        let lp = scalar_loss(model, &plus, target, kind)?;
        let mut minus = input.clone();
        minus.data_mut()[i] = minus.data()[i] - h;
        let lm = scalar_loss(model, &minus, target, kind)?;
        let fd = (lp - lm) / (2.0 * step);
        max_input_err = max_input_err.max(relative_error(fd, analytic_input.data()[i].as_f64()));
    }

    Ok(GradCheckReport {
        max_param_err,
        max_input_err,
    })
}
