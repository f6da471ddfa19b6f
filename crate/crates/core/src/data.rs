//! MNIST IDX ingestion, Gaussian-noise corruption, and shuffled batching.
//!
//! Images load as [N × 28 × 28 × 1] tensors with pixels normalized to [0, 1].
//! Gzip-compressed files are detected by their 0x1f 0x8b prefix regardless of
//! extension. Label files are never read; denoising needs no labels.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::model::IMAGE_SIDE;
use crate::rng::Rng;
use crate::tensor::Tensor;

const IDX_IMAGES_MAGIC: u32 = 2051;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    /// Conventional MNIST file stem for this split.
    pub fn images_stem(self) -> &'static str {
        match self {
            Split::Train => "train-images-idx3-ubyte",
            Split::Test => "t10k-images-idx3-ubyte",
        }
    }
}

/// Normalized clean images of one split.
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Tensor<f32>, // [N, 28, 28, 1]
    split: Split,
}

impl Dataset {
    /// Parses an IDX3 image file (raw or gzipped).
    pub fn from_idx(path: &Path, split: Split) -> Result<Self> {
        let raw = std::fs::read(path)?;
        let bytes = if raw.starts_with(&[0x1f, 0x8b]) {
            let mut decoded = Vec::new();
            GzDecoder::new(raw.as_slice())
                .read_to_end(&mut decoded)
                .map_err(|e| Error::Corrupt {
                    path: path.to_path_buf(),
                    reason: format!("gzip stream failed: {e}"),
                })?;
            decoded
        } else {
            raw
        };

        if bytes.len() < 4 {
            return Err(Error::Corrupt {
                path: path.to_path_buf(),
                reason: format!("magic needs 4 bytes, file has {}", bytes.len()),
            });
        }
        let be = |i: usize| u32::from_be_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
        let magic = be(0);
        if magic != IDX_IMAGES_MAGIC {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("magic {magic} is not an IDX3 image file ({IDX_IMAGES_MAGIC})"),
            });
        }
        if bytes.len() < 16 {
            return Err(Error::Corrupt {
                path: path.to_path_buf(),
                reason: format!("header needs 16 bytes, file has {}", bytes.len()),
            });
        }
        let count = be(4) as usize;
        let rows = be(8) as usize;
        let cols = be(12) as usize;
        if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported image shape {rows}x{cols}, expected 28x28"),
            });
        }
        let payload = &bytes[16..];
        let expected = count * rows * cols;
        if payload.len() != expected {
            return Err(Error::Corrupt {
                path: path.to_path_buf(),
                reason: format!(
                    "payload holds {} pixels, header declares {expected}",
                    payload.len()
                ),
            });
        }

        let data: Vec<f32> = payload.iter().map(|&b| f32::from(b) / 255.0).collect();
        Ok(Self {
            images: Tensor::from_vec(&[count, IMAGE_SIDE, IMAGE_SIDE, 1], data)?,
            split,
        })
    }

    /// Wraps an in-memory image tensor (tests, synthetic data).
    pub fn from_images(images: Tensor<f32>, split: Split) -> Result<Self> {
        match *images.shape() {
            [_, IMAGE_SIDE, IMAGE_SIDE, 1] => {}
            _ => {
                return Err(Error::Argument(format!(
                    "dataset images must be [N, 28, 28, 1], got {:?}",
                    images.shape()
                )))
            }
        }
        if images.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Argument(
                "dataset pixels must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { images, split })
    }

    /// Resolves `<dir>/<stem>` or `<dir>/<stem>.gz` and loads it.
    pub fn from_dir(dir: &Path, split: Split) -> Result<Self> {
        let raw = dir.join(split.images_stem());
        let gz = dir.join(format!("{}.gz", split.images_stem()));
        let path = if raw.exists() {
            raw
        } else if gz.exists() {
            gz
        } else {
            return Err(Error::Format {
                path: raw,
                reason: "file not found (nor its .gz variant)".into(),
            });
        };
        Self::from_idx(&path, split)
    }

    pub fn len(&self) -> usize {
        self.images.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn images(&self) -> &Tensor<f32> {
        &self.images
    }

    /// Keeps only the first `n` images (desk-scale runs).
    pub fn limit(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("limit must be at least 1".into()));
        }
        let n = n.min(self.len());
        let per_image = IMAGE_SIDE * IMAGE_SIDE;
        let data = self.images.data()[..n * per_image].to_vec();
        self.images = Tensor::from_vec(&[n, IMAGE_SIDE, IMAGE_SIDE, 1], data)?;
        Ok(self)
    }
}

/// Clean images and their noise-corrupted counterparts. The clean tensor is
/// the regression target and is never mutated.
#[derive(Debug, Clone)]
pub struct NoisyPair {
    pub clean: Tensor<f32>,
    pub noisy: Tensor<f32>,
}

impl NoisyPair {
    pub fn len(&self) -> usize {
        self.clean.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// noisy = clip(clean + noise_factor · N(0,1), 0, 1), i.i.d. per pixel.
pub fn add_gaussian_noise(
    images: &Tensor<f32>,
    noise_factor: f32,
    rng: &mut Rng,
) -> Result<NoisyPair> {
    if noise_factor < 0.0 {
        return Err(Error::Argument(format!(
            "noise factor must be non-negative, got {noise_factor}"
        )));
    }
    if noise_factor == 0.0 {
        return Ok(NoisyPair {
            clean: images.clone(),
            noisy: images.clone(),
        });
    }
    let noise = Tensor::<f32>::gaussian(rng, images.shape(), 0.0, 1.0)?;
    let noisy = images.zip(&noise, |c, z| (c + noise_factor * z).clamp(0.0, 1.0))?;
    Ok(NoisyPair {
        clean: images.clone(),
        noisy,
    })
}

/// One shuffled pass over a [`NoisyPair`], yielding (noisy, clean) batches.
/// The final short batch is included.
pub struct BatchIter<'a> {
    pair: &'a NoisyPair,
    order: Vec<usize>,
    batch_size: usize,
    cursor: usize,
}

pub fn batch_iter<'a>(
    pair: &'a NoisyPair,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<BatchIter<'a>> {
    if batch_size == 0 {
        return Err(Error::Argument("batch size must be at least 1".into()));
    }
    if pair.is_empty() {
        return Err(Error::Argument("cannot batch an empty dataset".into()));
    }
    let mut order: Vec<usize> = (0..pair.len()).collect();
    rng.shuffle(&mut order);
    Ok(BatchIter {
        pair,
        order,
        batch_size,
        cursor: 0,
    })
}

impl BatchIter<'_> {
    /// Visit order for this pass (tests assert the permutation property).
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

impl Iterator for BatchIter<'_> {
    type Item = (Tensor<f32>, Tensor<f32>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let indices = &self.order[self.cursor..end];
        self.cursor = end;

        let per_image: usize = self.pair.clean.shape()[1..].iter().product();
        let mut shape = self.pair.clean.shape().to_vec();
        shape[0] = indices.len();
        let gather = |src: &Tensor<f32>| {
            let mut out = Vec::with_capacity(indices.len() * per_image);
            for &i in indices {
                out.extend_from_slice(&src.data()[i * per_image..(i + 1) * per_image]);
            }
            Tensor::from_vec(&shape, out).expect("gathered batch shape is consistent")
        };
        Some((gather(&self.pair.noisy), gather(&self.pair.clean)))
    }
}
