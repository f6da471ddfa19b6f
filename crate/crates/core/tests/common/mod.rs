//! Shared helpers for the integration and acceptance suites.

#![allow(dead_code)]

use std::path::PathBuf;

use mnist_dae::tensor::{Scalar, Tensor};
use mnist_dae::Rng;

/// Directory holding the MNIST IDX files: MNIST_DIR, or the workspace-level
/// `data/` directory.
pub fn mnist_dir() -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("MNIST_DIR") {
        let p = PathBuf::from(dir);
        if p.join("train-images-idx3-ubyte").exists()
            || p.join("train-images-idx3-ubyte.gz").exists()
        {
            return Some(p);
        }
    }
    let workspace = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    if workspace.join("train-images-idx3-ubyte").exists()
        || workspace.join("train-images-idx3-ubyte.gz").exists()
    {
        return Some(workspace);
    }
    None
}

pub fn require_mnist() -> PathBuf {
    mnist_dir().expect(
        "MNIST IDX files not found: place train-images-idx3-ubyte and \
         t10k-images-idx3-ubyte under ./data or set MNIST_DIR",
    )
}

/// Path of the compiled CLI binary.
pub fn cli_bin() -> &'static str {
    env!("CARGO_BIN_EXE_mnist-dae")
}

/// Direct nested-loop convolution: the reference the GEMM path is checked
/// against. Cross-correlation, same padding, channels-last.
pub fn naive_conv2d_forward<T: Scalar>(
    x: &Tensor<T>,       // [n, h, w, ci]
    kernels: &Tensor<T>, // [k, k, ci, co]
    bias: &Tensor<T>,    // [co]
    stride: usize,
) -> Tensor<T> {
    let (n, h, w, ci) = (
        x.shape()[0],
        x.shape()[1],
        x.shape()[2],
        x.shape()[3],
    );
    let (k, co) = (kernels.shape()[0], kernels.shape()[3]);
    assert_eq!(kernels.shape()[2], ci);

    let out_h = h.div_ceil(stride);
    let out_w = w.div_ceil(stride);
    let pad_top = (((out_h - 1) * stride + k).saturating_sub(h)) / 2;
    let pad_left = (((out_w - 1) * stride + k).saturating_sub(w)) / 2;

    let mut out = vec![T::zero(); n * out_h * out_w * co];
    for img in 0..n {
        for oy in 0..out_h {
            for ox in 0..out_w {
                for c_out in 0..co {
                    let mut acc = bias.data()[c_out];
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky) as isize - pad_top as isize;
                            let ix = (ox * stride + kx) as isize - pad_left as isize;
                            if iy < 0 || iy >= h as isize || ix < 0 || ix >= w as isize {
                                continue;
                            }
                            for c_in in 0..ci {
                                let xv = x.data()
                                    [((img * h + iy as usize) * w + ix as usize) * ci + c_in];
                                let kv = kernels.data()[((ky * k + kx) * ci + c_in) * co + c_out];
                                acc += xv * kv;
                            }
                        }
                    }
                    out[((img * out_h + oy) * out_w + ox) * co + c_out] = acc;
                }
            }
        }
    }
    Tensor::from_vec(&[n, out_h, out_w, co], out).unwrap()
}

/// Uniform samples bounded away from zero, for layers with a kink there.
pub fn uniform_away_from_zero<T: Scalar>(rng: &mut Rng, shape: &[usize]) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let magnitude = rng.uniform(0.1, 1.5);
            let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
            T::from_f64(sign * magnitude)
        })
        .collect();
    Tensor::from_vec(shape, data).unwrap()
}
