//! Transposed 2-D convolution: the exact linear adjoint of a same-padded
//! strided convolution, used to upsample the latent back to image size.
//!
//! The kernel tensor is stored [k × k × out_ch × in_ch] — the same tensor the
//! matched forward convolution (output space → input space) would use.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{kernels, Scalar, Tensor};

use super::imcol::{col2im_add, im2col, ConvGeom};
use super::glorot_limit;

#[derive(Debug, Clone)]
pub struct TConv2D<T> {
    kernels: Tensor<T>, // [k × k × out_ch × in_ch]
    bias: Tensor<T>,    // [out_ch]
    grad_kernels: Tensor<T>,
    grad_bias: Tensor<T>,
    stride: usize,
    cache: Option<Tensor<T>>, // input [n × h × w × in_ch]
}

impl<T: Scalar> TConv2D<T> {
    pub fn new(in_ch: usize, out_ch: usize, k: usize, stride: usize, rng: &mut Rng) -> Self {
        let limit = glorot_limit(k * k * in_ch, k * k * out_ch);
        Self {
            kernels: Tensor::uniform(rng, &[k, k, out_ch, in_ch], -limit, limit),
            bias: Tensor::zeros(&[out_ch]),
            grad_kernels: Tensor::zeros(&[k, k, out_ch, in_ch]),
            grad_bias: Tensor::zeros(&[out_ch]),
            stride,
            cache: None,
        }
    }

    pub fn from_params(kernels: Tensor<T>, bias: Tensor<T>, stride: usize) -> Result<Self> {
        let shape = kernels.shape().to_vec();
        if shape.len() != 4 || shape[0] != shape[1] {
            return Err(Error::Argument(format!(
                "tconv kernels must be [k, k, out_ch, in_ch], got {shape:?}"
            )));
        }
        if bias.shape() != [shape[2]] {
            return Err(Error::shape("tconv bias", bias.shape(), &[shape[2]]));
        }
        Ok(Self {
            grad_kernels: Tensor::zeros(&shape),
            grad_bias: Tensor::zeros(&[shape[2]]),
            kernels,
            bias,
            stride,
            cache: None,
        })
    }

    pub fn k(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn out_ch(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn in_ch(&self) -> usize {
        self.kernels.shape()[3]
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn param_count(&self) -> usize {
        self.kernels.len() + self.bias.len()
    }

    pub fn kernels(&self) -> &Tensor<T> {
        &self.kernels
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    pub(crate) fn params_mut(&mut self) -> [(&mut Tensor<T>, &Tensor<T>); 2] {
        [
            (&mut self.kernels, &self.grad_kernels),
            (&mut self.bias, &self.grad_bias),
        ]
    }

    pub(crate) fn param_tensors_mut(&mut self) -> [&mut Tensor<T>; 2] {
        [&mut self.kernels, &mut self.bias]
    }

    /// Geometry of the matched convolution from output space back to input
    /// space; its adjoint defines this layer, padding convention included.
    fn matched_geom(&self, h: usize, w: usize) -> ConvGeom {
        ConvGeom::same(h * self.stride, w * self.stride, self.out_ch(), self.k(), self.stride)
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, h, w) = match *x.shape() {
            [n, h, w, c] if c == self.in_ch() => (n, h, w),
            _ => return Err(Error::shape("tconv2d_forward", x.shape(), self.kernels.shape())),
        };
        let ci = self.in_ch();
        let co = self.out_ch();
        let g = self.matched_geom(h, w);
        debug_assert_eq!((g.out_h, g.out_w), (h, w));
        let patch = g.patch_len(); // k·k·co
        let in_len = h * w * ci;
        let out_len = g.image_len(); // (h·s)·(w·s)·co

        // Scatter operand: kmat2[ci][(ky,kx,co)] = K[ky,kx,co,ci].
        let kdata = self.kernels.data();
        let mut kmat2 = vec![T::zero(); ci * patch];
        for j in 0..patch {
            for c in 0..ci {
                kmat2[c * patch + j] = kdata[j * ci + c];
            }
        }

        let x_data = x.data();
        let bias = self.bias.data();
        let mut out = vec![T::zero(); n * out_len];
        out.par_chunks_mut(out_len).enumerate().for_each(|(i, out_img)| {
            let x_img = &x_data[i * in_len..(i + 1) * in_len];
            // ycol = x · kmat2, one row per latent position.
            let mut ycol = vec![T::zero(); h * w * patch];
            for (p, ycol_row) in ycol.chunks_exact_mut(patch).enumerate() {
                kernels::matmul_nn_row(&x_img[p * ci..(p + 1) * ci], &kmat2, ycol_row, patch);
            }
            for out_row in out_img.chunks_exact_mut(co) {
                out_row.copy_from_slice(bias);
            }
            col2im_add(&ycol, &g, out_img);
        });

        self.cache = Some(x.clone());
        Tensor::from_vec(&[n, h * self.stride, w * self.stride, co], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .cache
            .take()
            .ok_or_else(|| Error::State("tconv2d backward called without a forward".into()))?;
        let (n, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let ci = self.in_ch();
        let co = self.out_ch();
        let g = self.matched_geom(h, w);
        if grad_out.shape() != [n, g.in_h, g.in_w, co] {
            return Err(Error::shape(
                "tconv2d_backward",
                grad_out.shape(),
                &[n, g.in_h, g.in_w, co],
            ));
        }
        let patch = g.patch_len();
        let in_len = h * w * ci;
        let out_len = g.image_len();
        let kmat = self.kernels.data(); // [k·k·co × ci]
        let x_data = x.data();
        let go_data = grad_out.data();

        self.grad_bias = grad_out
            .reshape(&[n * g.in_h * g.in_w, co])?
            .sum_axis0()?;

        // Input grad is the matched convolution applied to grad_out; the
        // kernel grad reuses the same unrolled patches.
        let mut grad_in = vec![T::zero(); n * in_len];
        let partials: Vec<Vec<T>> = grad_in
            .par_chunks_mut(in_len)
            .enumerate()
            .map(|(i, gx_img)| {
                let g_img = &go_data[i * out_len..(i + 1) * out_len];
                let x_img = &x_data[i * in_len..(i + 1) * in_len];
                let mut gcol = vec![T::zero(); h * w * patch];
                im2col(g_img, &g, &mut gcol);
                for (p, gx_row) in gx_img.chunks_exact_mut(ci).enumerate() {
                    kernels::matmul_nn_row(&gcol[p * patch..(p + 1) * patch], kmat, gx_row, ci);
                }
                let mut gk = vec![T::zero(); patch * ci];
                kernels::matmul_tn(&gcol, x_img, &mut gk, h * w, patch, ci);
                gk
            })
            .collect();

        let gk_total = self.grad_kernels.data_mut();
        gk_total.fill(T::zero());
        for partial in &partials {
            for (acc, &v) in gk_total.iter_mut().zip(partial) {
                *acc += v;
            }
        }

        Tensor::from_vec(&[n, h, w, ci], grad_in)
    }

    pub fn output_shape(&self, in_shape: &[usize]) -> Result<Vec<usize>> {
        match *in_shape {
            [h, w, c] if c == self.in_ch() => {
                Ok(vec![h * self.stride, w * self.stride, self.out_ch()])
            }
            _ => Err(Error::shape("tconv2d", in_shape, self.kernels.shape())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsamples_by_stride() {
        let mut rng = Rng::new(0);
        let mut layer = TConv2D::<f32>::new(32, 32, 3, 2, &mut rng);
        let x = Tensor::zeros(&[1, 7, 7, 32]);
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 14, 14, 32]);
        let mut layer2 = TConv2D::<f32>::new(32, 32, 3, 2, &mut rng);
        let y2 = layer2.forward(&y).unwrap();
        assert_eq!(y2.shape(), &[1, 28, 28, 32]);
        assert_eq!(layer.param_count(), 9_248);
    }

    #[test]
    fn zero_input_bias_only() {
        let mut layer = TConv2D::from_params(
            Tensor::<f32>::zeros(&[3, 3, 4, 2]),
            Tensor::filled(&[4], -1.5),
            2,
        )
        .unwrap();
        let y = layer.forward(&Tensor::zeros(&[1, 3, 3, 2])).unwrap();
        assert_eq!(y.shape(), &[1, 6, 6, 4]);
        assert!(y.data().iter().all(|&v| v == -1.5));
    }

    #[test]
    fn scatter_accumulate_oracle() {
        // 1×1 input [[2]] through a 2×2 kernel [[1,2],[3,4]] at stride 2:
        // every kernel tap lands in bounds, so the output is 2·kernel.
        let kernel = Tensor::from_vec(&[2, 2, 1, 1], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let mut layer = TConv2D::from_params(kernel, Tensor::zeros(&[1]), 2).unwrap();
        let y = layer
            .forward(&Tensor::from_vec(&[1, 1, 1, 1], vec![2.0]).unwrap())
            .unwrap();
        assert_eq!(y.shape(), &[1, 2, 2, 1]);
        assert_eq!(y.data(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn channel_mismatch_rejected() {
        let mut rng = Rng::new(1);
        let mut layer = TConv2D::<f32>::new(3, 2, 3, 2, &mut rng);
        assert!(matches!(
            layer.forward(&Tensor::zeros(&[1, 4, 4, 5])),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn backward_without_forward_rejected() {
        let mut rng = Rng::new(2);
        let mut layer = TConv2D::<f32>::new(2, 2, 3, 2, &mut rng);
        assert!(matches!(
            layer.backward(&Tensor::zeros(&[1, 8, 8, 2])),
            Err(Error::State(_))
        ));
    }
}
