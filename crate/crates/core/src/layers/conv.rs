//! 2-D convolution (cross-correlation, same padding) over channels-last
//! images. Forward and backward both run as im2col + GEMM, one image at a
//! time; images are processed in parallel and gradient partials are reduced
//! in batch order so results are bitwise deterministic.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{kernels, Scalar, Tensor};

use super::imcol::{col2im_add, im2col, ConvGeom};
use super::glorot_limit;

#[derive(Debug, Clone)]
pub struct Conv2D<T> {
    kernels: Tensor<T>, // [k × k × in_ch × out_ch]
    bias: Tensor<T>,    // [out_ch]
    grad_kernels: Tensor<T>,
    grad_bias: Tensor<T>,
    stride: usize,
    cache: Option<Tensor<T>>, // input [n × h × w × in_ch]
}

impl<T: Scalar> Conv2D<T> {
    pub fn new(in_ch: usize, out_ch: usize, k: usize, stride: usize, rng: &mut Rng) -> Self {
        let limit = glorot_limit(k * k * in_ch, k * k * out_ch);
        Self {
            kernels: Tensor::uniform(rng, &[k, k, in_ch, out_ch], -limit, limit),
            bias: Tensor::zeros(&[out_ch]),
            grad_kernels: Tensor::zeros(&[k, k, in_ch, out_ch]),
            grad_bias: Tensor::zeros(&[out_ch]),
            stride,
            cache: None,
        }
    }

    pub fn from_params(kernels: Tensor<T>, bias: Tensor<T>, stride: usize) -> Result<Self> {
        let shape = kernels.shape().to_vec();
        if shape.len() != 4 || shape[0] != shape[1] {
            return Err(Error::Argument(format!(
                "conv kernels must be [k, k, in_ch, out_ch], got {shape:?}"
            )));
        }
        if bias.shape() != [shape[3]] {
            return Err(Error::shape("conv bias", bias.shape(), &[shape[3]]));
        }
        Ok(Self {
            grad_kernels: Tensor::zeros(&shape),
            grad_bias: Tensor::zeros(&[shape[3]]),
            kernels,
            bias,
            stride,
            cache: None,
        })
    }

    pub fn k(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_ch(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn out_ch(&self) -> usize {
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

    fn geom(&self, x: &Tensor<T>) -> Result<(usize, ConvGeom)> {
        match *x.shape() {
            [n, h, w, c] if c == self.in_ch() => {
                Ok((n, ConvGeom::same(h, w, c, self.k(), self.stride)))
            }
            _ => Err(Error::shape("conv2d_forward", x.shape(), self.kernels.shape())),
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, g) = self.geom(x)?;
        let co = self.out_ch();
        let in_len = g.image_len();
        let out_len = g.out_positions() * co;
        let patch = g.patch_len();
        // Kernel tensor [k,k,ci,co] is row-major, so it already is the
        // [k·k·ci × co] GEMM operand.
        let kmat = self.kernels.data();
        let bias = self.bias.data();
        let x_data = x.data();

        let mut out = vec![T::zero(); n * out_len];
        out.par_chunks_mut(out_len).enumerate().for_each(|(i, out_img)| {
            let img = &x_data[i * in_len..(i + 1) * in_len];
            let mut col = vec![T::zero(); g.out_positions() * patch];
            im2col(img, &g, &mut col);
            for (p, out_row) in out_img.chunks_exact_mut(co).enumerate() {
                out_row.copy_from_slice(bias);
                kernels::matmul_nn_row(&col[p * patch..(p + 1) * patch], kmat, out_row, co);
            }
        });

        self.cache = Some(x.clone());
        Tensor::from_vec(&[n, g.out_h, g.out_w, co], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .cache
            .take()
            .ok_or_else(|| Error::State("conv2d backward called without a forward".into()))?;
        let (n, g) = self.geom(&x)?;
        let co = self.out_ch();
        if grad_out.shape() != [n, g.out_h, g.out_w, co] {
            return Err(Error::shape(
                "conv2d_backward",
                grad_out.shape(),
                &[n, g.out_h, g.out_w, co],
            ));
        }
        let patch = g.patch_len();
        let in_len = g.image_len();
        let out_len = g.out_positions() * co;
        let kmat = self.kernels.data();
        let x_data = x.data();
        let go_data = grad_out.data();

        // Bias gradient: sum over batch and spatial positions per channel.
        self.grad_bias = grad_out
            .reshape(&[n * g.out_positions(), co])?
            .sum_axis0()?;

        // Per image: kernel-grad partial  colᵀ·g  and input grad col2im(g·kmatᵀ).
        let mut grad_in = vec![T::zero(); n * in_len];
        let partials: Vec<Vec<T>> = grad_in
            .par_chunks_mut(in_len)
            .enumerate()
            .map(|(i, gx_img)| {
                let img = &x_data[i * in_len..(i + 1) * in_len];
                let g_img = &go_data[i * out_len..(i + 1) * out_len];
                let mut col = vec![T::zero(); g.out_positions() * patch];
                im2col(img, &g, &mut col);

                let mut gk = vec![T::zero(); patch * co];
                kernels::matmul_tn(&col, g_img, &mut gk, g.out_positions(), patch, co);

                let mut gcol = vec![T::zero(); g.out_positions() * patch];
                for (p, gcol_row) in gcol.chunks_exact_mut(patch).enumerate() {
                    kernels::matmul_nt_row(&g_img[p * co..(p + 1) * co], kmat, gcol_row, co);
                }
                col2im_add(&gcol, &g, gx_img);
                gk
            })
            .collect();

        // Reduce kernel-grad partials in batch order: deterministic.
        let gk_total = self.grad_kernels.data_mut();
        gk_total.fill(T::zero());
        for partial in &partials {
            for (acc, &v) in gk_total.iter_mut().zip(partial) {
                *acc += v;
            }
        }

        Tensor::from_vec(&[n, g.in_h, g.in_w, g.channels], grad_in)
    }

    /// Per-sample output shape under same padding.
    pub fn output_shape(&self, in_shape: &[usize]) -> Result<Vec<usize>> {
        match *in_shape {
            [h, w, c] if c == self.in_ch() => {
                let g = ConvGeom::same(h, w, c, self.k(), self.stride);
                Ok(vec![g.out_h, g.out_w, self.out_ch()])
            }
            _ => Err(Error::shape("conv2d", in_shape, self.kernels.shape())),
        }
    }
}
