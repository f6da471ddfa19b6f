//! 2×2 stride-2 max pooling with cached argmax routing for the backward pass.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone)]
struct PoolCache {
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
    /// Flat input index of the window maximum, one per output element.
    argmax: Vec<usize>,
}

/// Windowed max over non-overlapping 2×2 regions; odd edges keep the partial
/// window (same padding, −∞ semantics). Ties go to the first element in
/// row-major window order.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2D {
    cache: Option<PoolCache>,
}

const POOL: usize = 2;
const STRIDE: usize = 2;

impl MaxPool2D {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, h, w, c) = match *x.shape() {
            [n, h, w, c] => (n, h, w, c),
            _ => return Err(Error::shape("maxpool_forward", x.shape(), &[0, 0, 0, 0])),
        };
        let oh = h.div_ceil(STRIDE);
        let ow = w.div_ceil(STRIDE);
        let data = x.data();
        let mut out = vec![T::zero(); n * oh * ow * c];
        let mut argmax = vec![0usize; out.len()];

        for i in 0..n {
            let img = i * h * w * c;
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let mut best = T::neg_infinity();
                        let mut best_idx = 0usize;
                        for dy in 0..POOL {
                            let iy = oy * STRIDE + dy;
                            if iy >= h {
                                continue;
                            }
                            for dx in 0..POOL {
                                let ix = ox * STRIDE + dx;
                                if ix >= w {
                                    continue;
                                }
                                let idx = img + (iy * w + ix) * c + ch;
                                if data[idx] > best {
                                    best = data[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        let out_idx = ((i * oh + oy) * ow + ox) * c + ch;
                        out[out_idx] = best;
                        argmax[out_idx] = best_idx;
                    }
                }
            }
        }

        self.cache = Some(PoolCache {
            in_shape: x.shape().to_vec(),
            out_shape: vec![n, oh, ow, c],
            argmax,
        });
        Tensor::from_vec(&[n, oh, ow, c], out)
    }

    /// Routes each output gradient solely to its cached argmax position.
    pub fn backward<T: Scalar>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("maxpool backward called without a forward".into()))?;
        if grad_out.shape() != cache.out_shape {
            return Err(Error::shape(
                "maxpool_backward",
                grad_out.shape(),
                &cache.out_shape,
            ));
        }
        let mut grad_in = vec![T::zero(); cache.in_shape.iter().product()];
        for (&idx, &g) in cache.argmax.iter().zip(grad_out.data()) {
            grad_in[idx] += g;
        }
        Tensor::from_vec(&cache.in_shape, grad_in)
    }

    pub fn output_shape(&self, in_shape: &[usize]) -> Result<Vec<usize>> {
        match *in_shape {
            [h, w, c] => Ok(vec![h.div_ceil(STRIDE), w.div_ceil(STRIDE), c]),
            _ => Err(Error::shape("maxpool", in_shape, &[0, 0, 0])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_window_max_and_routing() {
        let x = Tensor::from_vec(&[1, 2, 2, 1], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let mut pool = MaxPool2D::new();
        let y = pool.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
        let grad_in = pool
            .backward(&Tensor::from_vec(&[1, 1, 1, 1], vec![7.0]).unwrap())
            .unwrap();
        // Gradient lands only at position (1,1).
        assert_eq!(grad_in.data(), &[0.0, 0.0, 0.0, 7.0]);
    }

    #[test]
    fn ties_break_to_first_index_and_mass_is_conserved() {
        let x = Tensor::filled(&[1, 4, 4, 1], 3.0f32);
        let mut pool = MaxPool2D::new();
        let y = pool.forward(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 3.0));
        let g = Tensor::from_vec(&[1, 2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let grad_in = pool.backward(&g).unwrap();
        // First-index rule: each window's (0,0) corner gets the gradient.
        assert_eq!(grad_in.data()[0], 1.0);
        assert_eq!(grad_in.data()[2], 2.0);
        assert_eq!(grad_in.data()[8], 3.0);
        assert_eq!(grad_in.data()[10], 4.0);
        let g_sum: f32 = g.data().iter().sum();
        let gi_sum: f32 = grad_in.data().iter().sum();
        assert_eq!(g_sum, gi_sum);
    }

    #[test]
    fn mnist_shape_chain() {
        let mut pool = MaxPool2D::new();
        let y = pool.forward(&Tensor::<f32>::zeros(&[1, 28, 28, 32])).unwrap();
        assert_eq!(y.shape(), &[1, 14, 14, 32]);
        let y = pool.forward(&Tensor::<f32>::zeros(&[1, 14, 14, 32])).unwrap();
        assert_eq!(y.shape(), &[1, 7, 7, 32]);
    }

    #[test]
    fn odd_edges_keep_partial_windows() {
        let x = Tensor::from_vec(
            &[1, 3, 3, 1],
            vec![1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
        )
        .unwrap();
        let mut pool = MaxPool2D::new();
        let y = pool.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2, 1]);
        assert_eq!(y.data(), &[5.0, 6.0, 8.0, 9.0]);
    }

    #[test]
    fn backward_without_forward_rejected() {
        let mut pool = MaxPool2D::new();
        assert!(matches!(
            pool.backward(&Tensor::<f32>::zeros(&[1, 2, 2, 1])),
            Err(Error::State(_))
        ));
    }
}
