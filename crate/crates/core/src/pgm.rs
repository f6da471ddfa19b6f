//! Binary PGM (P5) images: the dependency-free grayscale format used for the
//! clean | noisy | denoised comparison panels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Maps a unit-interval pixel to a byte by round(v·255), clamped.
pub fn quantize(v: f32) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Writes a P5 file with maxval 255.
pub fn write(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::Argument(format!(
            "pgm write: {}x{} needs {} bytes, got {}",
            width,
            height,
            width * height,
            pixels.len()
        )));
    }
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a P5 file (maxval ≤ 255, `#` comments allowed in the header).
pub fn read(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    let corrupt = |reason: &str| Error::Corrupt {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if !bytes.starts_with(b"P5") {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: "not a binary PGM (missing P5 magic)".into(),
        });
    }

    // Header: three whitespace-separated tokens after the magic, then a
    // single whitespace byte before the raster.
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt("header token is not a number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("digits are utf8")
            .parse()
            .map_err(|_| corrupt("header token out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unsupported maxval {maxval}"),
        });
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(corrupt("missing separator before raster"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    if raster.len() != width * height {
        return Err(corrupt(&format!(
            "raster holds {} bytes, header declares {}",
            raster.len(),
            width * height
        )));
    }
    Ok((width, height, raster.to_vec()))
}

/// Lays out single-channel images of equal height side by side, optionally
/// separated by 2-pixel white columns. Returns (width, height, pixels).
pub fn horizontal_panel(images: &[&Tensor<f32>], separator: bool) -> Result<(usize, usize, Vec<u8>)> {
    if images.is_empty() {
        return Err(Error::Argument("panel needs at least one image".into()));
    }
    let dims = |t: &Tensor<f32>| -> Result<(usize, usize)> {
        match *t.shape() {
            [h, w] | [h, w, 1] | [1, h, w, 1] => Ok((h, w)),
            _ => Err(Error::Argument(format!(
                "panel images must be single-channel 2-D, got {:?}",
                t.shape()
            ))),
        }
    };
    let (height, _) = dims(images[0])?;
    let sep_w = if separator { 2 } else { 0 };
    let mut widths = Vec::with_capacity(images.len());
    for img in images {
        let (h, w) = dims(img)?;
        if h != height {
            return Err(Error::Argument(format!(
                "panel images must share a height: {h} vs {height}"
            )));
        }
        widths.push(w);
    }
    let total_w: usize = widths.iter().sum::<usize>() + sep_w * (images.len() - 1);
    let mut pixels = vec![255u8; total_w * height];
    let mut x0 = 0;
    for (img, &w) in images.iter().zip(&widths) {
        for y in 0..height {
            for x in 0..w {
                pixels[y * total_w + x0 + x] = quantize(img.data()[y * w + x]);
            }
        }
        x0 += w + sep_w;
    }
    Ok((total_w, height, pixels))
}
