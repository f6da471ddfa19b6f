//! Parameter update rules: Adam (the training default) and plain SGD.

use crate::error::{Error, Result};
use crate::model::Model;
use crate::tensor::{Scalar, Tensor};

/// Adam hyperparameters. Defaults are lr 0.001, β₁ 0.9, β₂ 0.999, ε 1e-7.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
        }
    }
}

/// Per-parameter-tensor Adam state: first/second moment estimates and the
/// step counter used for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m: Tensor<T>,
    v: Tensor<T>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(shape: &[usize]) -> Self {
        Self {
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn second_moment(&self) -> &Tensor<T> {
        &self.v
    }

    /// One Adam update:
    /// m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², bias-corrected, then
    /// params ← params − lr·m̂/(√v̂ + ε).
    pub fn step(
        &mut self,
        cfg: &AdamConfig,
        params: &mut Tensor<T>,
        grads: &Tensor<T>,
    ) -> Result<()> {
        if params.shape() != grads.shape() {
            return Err(Error::shape("adam_step", params.shape(), grads.shape()));
        }
        if self.m.shape() != params.shape() {
            return Err(Error::shape("adam_step", self.m.shape(), params.shape()));
        }
        self.t += 1;
        let b1 = T::from_f64(cfg.beta1);
        let b2 = T::from_f64(cfg.beta2);
        let one = T::one();
        let lr = T::from_f64(cfg.lr);
        let eps = T::from_f64(cfg.eps);
        let m_corr = T::from_f64(1.0 - cfg.beta1.powi(self.t as i32));
        let v_corr = T::from_f64(1.0 - cfg.beta2.powi(self.t as i32));

        let m = self.m.data_mut();
        let v = self.v.data_mut();
        let p = params.data_mut();
        let g = grads.data();
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let m_hat = m[i] / m_corr;
            let v_hat = v[i] / v_corr;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Adam over every parameter tensor of a model, one state per tensor.
///
/// States are keyed by the model's parameter-slot order, which is fixed
/// for the lifetime of an architecture.
#[derive(Debug)]
pub struct Adam<T> {
    pub cfg: AdamConfig,
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            states: Vec::new(),
        }
    }

    /// Applies one update to every parameter tensor using its current grads.
    pub fn step_model(&mut self, model: &mut Model<T>) -> Result<()> {
        let mut slots = model.param_slots();
        if self.states.is_empty() {
            self.states = slots
                .iter()
                .map(|slot| AdamState::new(slot.value.shape()))
                .collect();
        }
        if self.states.len() != slots.len() {
            return Err(Error::State(format!(
                "optimizer tracks {} parameter tensors, model has {}",
                self.states.len(),
                slots.len()
            )));
        }
        for (state, slot) in self.states.iter_mut().zip(slots.iter_mut()) {
            state.step(&self.cfg, slot.value, slot.grad)?;
        }
        Ok(())
    }
}

/// Plain gradient descent: params ← params − lr·grads.
pub fn sgd_step<T: Scalar>(params: &mut Tensor<T>, grads: &Tensor<T>, lr: T) -> Result<()> {
    if params.shape() != grads.shape() {
        return Err(Error::shape("sgd_step", params.shape(), grads.shape()));
    }
    for (p, &g) in params.data_mut().iter_mut().zip(grads.data()) {
        *p -= lr * g;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn t64(data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(&[data.len()], data.to_vec()).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(&[3]);
        let mut params = t64(&[1.0, -2.0, 0.5]);
        let before = params.clone();
        state.step(&cfg, &mut params, &t64(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_roughly_lr() {
        // t=1: m̂ = g, v̂ = g², so Δ = lr·g/(|g| + ε) ≈ lr·sign(g).
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(&[2]);
        let mut params = t64(&[0.0, 0.0]);
        state.step(&cfg, &mut params, &t64(&[3.0, -0.25])).unwrap();
        assert!((params.data()[0] + cfg.lr).abs() < 1e-6);
        assert!((params.data()[1] - cfg.lr).abs() < 1e-6);
    }

    #[test]
    fn first_step_magnitude_is_bounded_by_lr() {
        let cfg = AdamConfig::default();
        let mut rng = Rng::new(8);
        for _ in 0..20 {
            let mut state = AdamState::new(&[10]);
            let mut params = Tensor::<f64>::uniform(&mut rng, &[10], -1.0, 1.0);
            let before = params.clone();
            let grads = Tensor::<f64>::uniform(&mut rng, &[10], -5.0, 5.0);
            state.step(&cfg, &mut params, &grads).unwrap();
            for i in 0..10 {
                let delta = (params.data()[i] - before.data()[i]).abs();
                let bound = cfg.lr * grads.data()[i].abs()
                    / (grads.data()[i].abs() + cfg.eps)
                    + 1e-12;
                assert!(delta <= bound, "delta {delta} exceeds bound {bound}");
            }
        }
    }

    #[test]
    fn minimizes_scalar_quadratic() {
        // 200 steps on f(θ) = θ² from θ₀ = 1 with lr 0.1.
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(&[1]);
        let mut theta = t64(&[1.0]);
        for _ in 0..200 {
            let g = t64(&[2.0 * theta.data()[0]]);
            state.step(&cfg, &mut theta, &g).unwrap();
        }
        assert!(theta.data()[0].abs() < 0.05, "theta = {}", theta.data()[0]);
    }

    #[test]
    fn second_moment_stays_nonnegative() {
        let cfg = AdamConfig::default();
        let mut rng = Rng::new(9);
        let mut state = AdamState::new(&[6]);
        let mut params = Tensor::<f64>::zeros(&[6]);
        for _ in 0..100 {
            let grads = Tensor::<f64>::uniform(&mut rng, &[6], -10.0, 10.0);
            state.step(&cfg, &mut params, &grads).unwrap();
            assert!(state.second_moment().data().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn monotone_decrease_on_convex_quadratic() {
        // Smoke property: first 10 steps with lr 1e-3 on f(θ) = Σθ².
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(&[4]);
        let mut theta = t64(&[1.0, -0.5, 0.25, 2.0]);
        let f = |t: &Tensor<f64>| t.data().iter().map(|x| x * x).sum::<f64>();
        let mut prev = f(&theta);
        for _ in 0..10 {
            let g = theta.scale(2.0);
            state.step(&cfg, &mut theta, &g).unwrap();
            let now = f(&theta);
            assert!(now < prev, "loss not decreasing: {now} vs {prev}");
            prev = now;
        }
    }

    #[test]
    fn adam_shape_mismatch_rejected() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(&[2]);
        let mut params = t64(&[1.0, 2.0]);
        let err = state.step(&cfg, &mut params, &t64(&[1.0])).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn sgd_zero_lr_is_identity() {
        let mut params = t64(&[1.0, 2.0]);
        let before = params.clone();
        sgd_step(&mut params, &t64(&[5.0, -5.0]), 0.0).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn sgd_arithmetic() {
        let mut params = t64(&[1.0]);
        sgd_step(&mut params, &t64(&[2.0]), 0.5).unwrap();
        assert_eq!(params.data(), &[0.0]);
    }

    #[test]
    fn sgd_two_steps_are_linear() {
        let mut params = t64(&[1.0, -1.0]);
        let grads = t64(&[3.0, 4.0]);
        sgd_step(&mut params, &grads, 0.1).unwrap();
        sgd_step(&mut params, &grads, 0.1).unwrap();
        assert!((params.data()[0] - (1.0 - 0.2 * 3.0)).abs() < 1e-12);
        assert!((params.data()[1] - (-1.0 - 0.2 * 4.0)).abs() < 1e-12);
    }
}
