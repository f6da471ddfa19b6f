//! Binary checkpoint format for trained models.
//!
//! Layout (all integers little-endian):
//!   magic "MDAE", format version u32, arch tag u8, layer count u32, then one
//!   record per layer: kind tag u8, parameter-tensor count u8, and for each
//!   parameter tensor its rank u32, its dims as u32s, and raw f32 data.
//!
//! Loading rebuilds the architecture from the arch tag and overwrites every
//! parameter, verifying kinds and shapes along the way; a load either returns
//! a complete model or fails without leaking a partial one.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::layers::Layer;
use crate::model::{build, Arch, Model};
use crate::rng::Rng;

const MAGIC: &[u8; 4] = b"MDAE";
const VERSION: u32 = 1;

fn kind_tag<T: crate::tensor::Scalar>(layer: &Layer<T>) -> u8 {
    match layer.kind_name() {
        "dense" => 0,
        "conv2d" => 1,
        "maxpool2d" => 2,
        "tconv2d" => 3,
        "relu" => 4,
        "sigmoid" => 5,
        "flatten" => 6,
        "reshape" => 7,
        other => unreachable!("unknown layer kind {other}"),
    }
}

fn arch_tag(arch: Arch) -> u8 {
    match arch {
        Arch::Dense => 0,
        Arch::Conv => 1,
    }
}

fn arch_from_tag(tag: u8, path: &Path) -> Result<Arch> {
    match tag {
        0 => Ok(Arch::Dense),
        1 => Ok(Arch::Conv),
        other => Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unknown architecture tag {other}"),
        }),
    }
}

pub fn save(model: &mut Model<f32>, path: &Path) -> Result<()> {
    let arch = model.arch().ok_or_else(|| {
        Error::Argument("only the dense/conv autoencoder models can be checkpointed".into())
    })?;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.push(arch_tag(arch));
    bytes.extend_from_slice(&(model.layer_count() as u32).to_le_bytes());
    for layer in model.layers_mut() {
        bytes.push(kind_tag(layer));
        let params = layer.param_tensors_mut();
        bytes.push(params.len() as u8);
        for tensor in params {
            bytes.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
            for &dim in tensor.shape() {
                bytes.extend_from_slice(&(dim as u32).to_le_bytes());
            }
            for &v in tensor.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: PathBuf,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::Corrupt {
            path: self.path.clone(),
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.corrupt(format!(
                "truncated: wanted {} bytes at offset {}, file has {}",
                n,
                self.pos,
                self.bytes.len()
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn load(path: &Path) -> Result<Model<f32>> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path: path.to_path_buf(),
    };

    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("bad magic {magic:?}, expected {MAGIC:?}"),
        });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unsupported format version {version}"),
        });
    }
    let arch = arch_from_tag(r.u8()?, path)?;

    // The arch tag fully determines the layer stack; the file must agree.
    let mut model = build::<f32>(arch, &mut Rng::new(0));
    let layer_count = r.u32()? as usize;
    if layer_count != model.layer_count() {
        return Err(r.corrupt(format!(
            "arch {} expects {} layers, file declares {}",
            arch.name(),
            model.layer_count(),
            layer_count
        )));
    }

    for (index, layer) in model.layers_mut().iter_mut().enumerate() {
        let tag = r.u8()?;
        if tag != kind_tag(layer) {
            return Err(r.corrupt(format!(
                "layer {index}: kind tag {tag} does not match arch {} ({})",
                arch.name(),
                layer.kind_name()
            )));
        }
        let declared = r.u8()? as usize;
        let params = layer.param_tensors_mut();
        if declared != params.len() {
            return Err(r.corrupt(format!(
                "layer {index}: expected {} parameter tensors, file declares {declared}",
                params.len()
            )));
        }
        for tensor in params {
            let ndim = r.u32()? as usize;
            if ndim != tensor.shape().len() {
                return Err(r.corrupt(format!(
                    "layer {index}: parameter rank {ndim} does not match arch shape {:?}",
                    tensor.shape()
                )));
            }
            for d in 0..ndim {
                let dim = r.u32()? as usize;
                let expected = tensor.shape()[d];
                if dim != expected {
                    return Err(r.corrupt(format!(
                        "layer {index}: parameter dim {dim} does not match arch dim {expected}"
                    )));
                }
            }
            let raw = r.take(tensor.len() * 4)?;
            for (dst, chunk) in tensor.data_mut().iter_mut().zip(raw.chunks_exact(4)) {
                *dst = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            }
        }
    }

    if r.pos != bytes.len() {
        return Err(r.corrupt(format!(
            "{} trailing bytes after the last layer record",
            bytes.len() - r.pos
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_dense_autoencoder;
    use crate::tensor::Tensor;

    #[test]
    fn round_trip_preserves_forward_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = Rng::new(11);
        let mut model = build_dense_autoencoder::<f32>(&mut rng);
        let x = Tensor::uniform(&mut rng, &[2, 28, 28, 1], 0.0, 1.0);
        let y_before = model.forward(&x).unwrap();
        save(&mut model, &path).unwrap();
        let mut loaded = load(&path).unwrap();
        let y_after = loaded.forward(&x).unwrap();
        assert_eq!(y_before, y_after);
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        let mut rng = Rng::new(12);
        let mut model = crate::model::build_conv_autoencoder::<f32>(&mut rng);
        save(&mut model, &p1).unwrap();
        let mut loaded = load(&p1).unwrap();
        save(&mut loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = Rng::new(13);
        let mut model = build_dense_autoencoder::<f32>(&mut rng);
        save(&mut model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load(&path), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        std::fs::write(&path, b"NOPE0000000000").unwrap();
        assert!(matches!(load(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn trailing_garbage_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = Rng::new(14);
        let mut model = build_dense_autoencoder::<f32>(&mut rng);
        save(&mut model, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0, 1, 2, 3]);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn arch_mismatch_is_detected() {
        // A dense checkpoint whose arch byte is flipped to conv must fail
        // loudly rather than load as the wrong architecture.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = Rng::new(15);
        let mut model = build_dense_autoencoder::<f32>(&mut rng);
        save(&mut model, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[8] = 1; // arch tag sits after magic + version
        std::fs::write(&path, bytes).unwrap();
        let err = load(&path).unwrap_err();
        assert!(matches!(err, Error::Corrupt { .. }), "{err}");
    }
}
