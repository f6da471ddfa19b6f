//! Same-padding geometry and the im2col / col2im patch transforms that turn
//! convolution into one matrix multiplication per image.
//!
//! Layout contract: images are channels-last [H, W, C]; a patch matrix has
//! one row per output position and columns ordered (ky, kx, channel), so the
//! channel run of each kernel tap is contiguous.

use crate::tensor::Scalar;

/// Resolved geometry of a same-padded convolution over one image.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    pub in_h: usize,
    pub in_w: usize,
    pub channels: usize,
    pub k: usize,
    pub stride: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub pad_top: usize,
    pub pad_left: usize,
}

impl ConvGeom {
    /// Same padding: output dims are ceil(in/stride); total padding is split
    /// with the smaller half leading.
    pub fn same(in_h: usize, in_w: usize, channels: usize, k: usize, stride: usize) -> Self {
        let out_h = in_h.div_ceil(stride);
        let out_w = in_w.div_ceil(stride);
        let pad_h = ((out_h - 1) * stride + k).saturating_sub(in_h);
        let pad_w = ((out_w - 1) * stride + k).saturating_sub(in_w);
        Self {
            in_h,
            in_w,
            channels,
            k,
            stride,
            out_h,
            out_w,
            pad_top: pad_h / 2,
            pad_left: pad_w / 2,
        }
    }

    pub fn patch_len(&self) -> usize {
        self.k * self.k * self.channels
    }

    pub fn out_positions(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn image_len(&self) -> usize {
        self.in_h * self.in_w * self.channels
    }
}

/// Unrolls one image into a [out_h·out_w × k·k·C] patch matrix.
/// Out-of-bounds taps read as zero.
pub(crate) fn im2col<T: Scalar>(img: &[T], g: &ConvGeom, col: &mut [T]) {
    debug_assert_eq!(img.len(), g.image_len());
    debug_assert_eq!(col.len(), g.out_positions() * g.patch_len());
    let c = g.channels;
    let row_len = g.patch_len();
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            let row = (oy * g.out_w + ox) * row_len;
            for ky in 0..g.k {
                let iy = (oy * g.stride + ky) as isize - g.pad_top as isize;
                for kx in 0..g.k {
                    let ix = (ox * g.stride + kx) as isize - g.pad_left as isize;
                    let dst = row + (ky * g.k + kx) * c;
                    if iy >= 0 && (iy as usize) < g.in_h && ix >= 0 && (ix as usize) < g.in_w {
                        let src = (iy as usize * g.in_w + ix as usize) * c;
                        col[dst..dst + c].copy_from_slice(&img[src..src + c]);
                    } else {
                        col[dst..dst + c].fill(T::zero());
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds a patch matrix back onto an image.
pub(crate) fn col2im_add<T: Scalar>(col: &[T], g: &ConvGeom, img: &mut [T]) {
    debug_assert_eq!(img.len(), g.image_len());
    debug_assert_eq!(col.len(), g.out_positions() * g.patch_len());
    let c = g.channels;
    let row_len = g.patch_len();
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            let row = (oy * g.out_w + ox) * row_len;
            for ky in 0..g.k {
                let iy = (oy * g.stride + ky) as isize - g.pad_top as isize;
                for kx in 0..g.k {
                    let ix = (ox * g.stride + kx) as isize - g.pad_left as isize;
                    if iy >= 0 && (iy as usize) < g.in_h && ix >= 0 && (ix as usize) < g.in_w {
                        let src = row + (ky * g.k + kx) * c;
                        let dst = (iy as usize * g.in_w + ix as usize) * c;
                        for ch in 0..c {
                            img[dst + ch] += col[src + ch];
                        }
                    }
                }
            }
        }
    }
}
