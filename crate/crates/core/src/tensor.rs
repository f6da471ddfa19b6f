//! Dense n-dimensional arrays and the linear-algebra kernels built on them.
//!
//! Layout is always row-major and images are channels-last (H×W×C). Production
//! paths run in `f32`; every operation is also available in `f64`, which the
//! finite-difference gradient checks rely on. Tensors returned from an
//! operation are treated as immutable values.

use std::fmt;

use num_traits::Float;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Element type of a [`Tensor`]: `f32` in production, `f64` for checks.
pub trait Scalar:
    Float + num_traits::NumAssignOps + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    /// Lossy conversion from `f64`, used when materializing random draws.
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

/// Below this many multiply-adds a matmul is not worth parallelizing.
const PAR_MATMUL_WORK: usize = 1 << 17;

/// Dense row-major tensor with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Builds a tensor from a flat row-major buffer.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Argument(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        if shape.contains(&0) {
            return Err(Error::Argument(format!(
                "shape {shape:?} contains a zero dimension"
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        }
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// I.i.d. normal samples via the generator's Box–Muller stream.
    pub fn gaussian(rng: &mut Rng, shape: &[usize], mean: f64, std: f64) -> Result<Self> {
        if std < 0.0 {
            return Err(Error::Argument(format!(
                "standard deviation must be non-negative, got {std}"
            )));
        }
        let n: usize = shape.iter().product();
        let mut raw = vec![0.0f64; n];
        rng.fill_standard_normal(&mut raw);
        let data = raw
            .into_iter()
            .map(|z| T::from_f64(mean + std * z))
            .collect();
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Uniform samples in [lo, hi), drawn in row-major order.
    pub fn uniform(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Self {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| T::from_f64(rng.uniform(lo, hi))).collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Same data order under a new shape; element counts must agree.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Self> {
        let expected: usize = new_shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::shape("reshape", &self.shape, new_shape));
        }
        Ok(Self {
            shape: new_shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Reshape without copying; consumes the tensor.
    pub fn into_reshaped(mut self, new_shape: &[usize]) -> Result<Self> {
        let expected: usize = new_shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::shape("reshape", &self.shape, new_shape));
        }
        self.shape = new_shape.to_vec();
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pairwise combine; shapes must match exactly.
    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape("zip", &self.shape, &other.shape));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|x| x * factor)
    }

    /// Sum of all elements, accumulated in f64 for stability.
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|x| x.as_f64()).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Column sums of a 2-D tensor: [m×n] → [n].
    pub fn sum_axis0(&self) -> Result<Self> {
        let [_, n] = self.dims2("sum_axis0")?;
        let mut out = vec![T::zero(); n];
        for row in self.data.chunks_exact(n) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        Ok(Self {
            shape: vec![n],
            data: out,
        })
    }

    /// 2-D transpose.
    pub fn transposed(&self) -> Result<Self> {
        let [m, n] = self.dims2("transpose")?;
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Ok(Self {
            shape: vec![n, m],
            data: out,
        })
    }

    /// Standard matrix product: [m×k] · [k×n] → [m×n].
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let [m, k] = self.dims2("matmul")?;
        let [k2, n] = other.dims2("matmul")?;
        if k != k2 {
            return Err(Error::shape("matmul", &self.shape, &other.shape));
        }
        let mut out = vec![T::zero(); m * n];
        if m * n * k >= PAR_MATMUL_WORK {
            out.par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, out_row)| {
                    kernels::matmul_nn_row(&self.data[i * k..(i + 1) * k], &other.data, out_row, n);
                });
        } else {
            for (i, out_row) in out.chunks_mut(n).enumerate() {
                kernels::matmul_nn_row(&self.data[i * k..(i + 1) * k], &other.data, out_row, n);
            }
        }
        Ok(Self {
            shape: vec![m, n],
            data: out,
        })
    }

    /// Product with the right operand transposed: [m×k] · [n×k]ᵀ → [m×n].
    pub fn matmul_nt(&self, other: &Self) -> Result<Self> {
        let [m, k] = self.dims2("matmul_nt")?;
        let [n, k2] = other.dims2("matmul_nt")?;
        if k != k2 {
            return Err(Error::shape("matmul_nt", &self.shape, &other.shape));
        }
        let mut out = vec![T::zero(); m * n];
        if m * n * k >= PAR_MATMUL_WORK {
            out.par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, out_row)| {
                    kernels::matmul_nt_row(&self.data[i * k..(i + 1) * k], &other.data, out_row, k);
                });
        } else {
            for (i, out_row) in out.chunks_mut(n).enumerate() {
                kernels::matmul_nt_row(&self.data[i * k..(i + 1) * k], &other.data, out_row, k);
            }
        }
        Ok(Self {
            shape: vec![m, n],
            data: out,
        })
    }

    /// Product with the left operand transposed: [k×m]ᵀ · [k×n] → [m×n].
    pub fn matmul_tn(&self, other: &Self) -> Result<Self> {
        let [k, m] = self.dims2("matmul_tn")?;
        let [k2, n] = other.dims2("matmul_tn")?;
        if k != k2 {
            return Err(Error::shape("matmul_tn", &self.shape, &other.shape));
        }
        let mut out = vec![T::zero(); m * n];
        kernels::matmul_tn(&self.data, &other.data, &mut out, k, m, n);
        Ok(Self {
            shape: vec![m, n],
            data: out,
        })
    }

    /// Interprets a 2-D tensor, returning [rows, cols].
    pub(crate) fn dims2(&self, op: &'static str) -> Result<[usize; 2]> {
        match self.shape.as_slice() {
            &[m, n] => Ok([m, n]),
            _ => Err(Error::ShapeMismatch {
                op,
                lhs: self.shape.clone(),
                rhs: vec![0, 0],
            }),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Sequential slice-level kernels shared by tensor ops and the conv layers.
pub(crate) mod kernels {
    use super::Scalar;

    /// One output row of C = A·B: `out_row += a_row · b`, b is [k×n] row-major.
    #[inline]
    pub fn matmul_nn_row<T: Scalar>(a_row: &[T], b: &[T], out_row: &mut [T], n: usize) {
        for (&aik, b_row) in a_row.iter().zip(b.chunks_exact(n)) {
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }

    /// One output row of C = A·Bᵀ: dot products against rows of b.
    #[inline]
    pub fn matmul_nt_row<T: Scalar>(a_row: &[T], b: &[T], out_row: &mut [T], k: usize) {
        for (o, b_row) in out_row.iter_mut().zip(b.chunks_exact(k)) {
            let mut acc = T::zero();
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            *o = acc;
        }
    }

    /// C = Aᵀ·B with A [k×m], B [k×n], accumulating over k in fixed order.
    pub fn matmul_tn<T: Scalar>(a: &[T], b: &[T], out: &mut [T], k: usize, m: usize, n: usize) {
        for kk in 0..k {
            let b_row = &b[kk * n..(kk + 1) * n];
            for i in 0..m {
                let aki = a[kk * m + i];
                let out_row = &mut out[i * n..(i + 1) * n];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += aki * bv;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t32(shape: &[usize], data: &[f32]) -> Tensor<f32> {
        Tensor::from_vec(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let eye = t32(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let b = t32(&[2, 2], &[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(eye.matmul(&b).unwrap(), b);
    }

    #[test]
    fn matmul_row_dot_column() {
        // Hand oracle: [[1,2],[3,4]] · [[1],[1]] = [[1+2],[3+4]].
        let a = t32(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let b = t32(&[2, 1], &[1.0, 1.0]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[2, 1]);
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_zero_annihilates() {
        let a = Tensor::<f32>::zeros(&[3, 4]);
        let mut rng = Rng::new(1);
        let b = Tensor::<f32>::uniform(&mut rng, &[4, 2], -1.0, 1.0);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[3, 2]);
        assert!(c.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::<f32>::zeros(&[2, 3]);
        let b = Tensor::<f32>::zeros(&[4, 2]);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[4, 2]"), "{msg}");
    }

    #[test]
    fn matmul_variants_agree_with_explicit_transpose() {
        let mut rng = Rng::new(5);
        let a = Tensor::<f64>::uniform(&mut rng, &[7, 4], -1.0, 1.0);
        let b = Tensor::<f64>::uniform(&mut rng, &[9, 4], -1.0, 1.0);
        let nt = a.matmul_nt(&b).unwrap();
        let reference = a.matmul(&b.transposed().unwrap()).unwrap();
        for (x, y) in nt.data().iter().zip(reference.data()) {
            assert!((x - y).abs() < 1e-12);
        }

        let c = Tensor::<f64>::uniform(&mut rng, &[4, 7], -1.0, 1.0);
        let d = Tensor::<f64>::uniform(&mut rng, &[4, 9], -1.0, 1.0);
        let tn = c.matmul_tn(&d).unwrap();
        let reference = c.transposed().unwrap().matmul(&d).unwrap();
        for (x, y) in tn.data().iter().zip(reference.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_associativity_within_tolerance() {
        let mut rng = Rng::new(11);
        for _ in 0..10 {
            let a = Tensor::<f32>::uniform(&mut rng, &[5, 6], -1.0, 1.0);
            let b = Tensor::<f32>::uniform(&mut rng, &[6, 4], -1.0, 1.0);
            let c = Tensor::<f32>::uniform(&mut rng, &[4, 3], -1.0, 1.0);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                // Relative with an absolute floor of 1: entries that nearly
                // cancel carry no meaningful relative precision.
                let rel = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                assert!(rel < 1e-5, "f32 associativity violated: {x} vs {y}");
            }
        }
        for _ in 0..10 {
            let a = Tensor::<f64>::uniform(&mut rng, &[5, 6], -1.0, 1.0);
            let b = Tensor::<f64>::uniform(&mut rng, &[6, 4], -1.0, 1.0);
            let c = Tensor::<f64>::uniform(&mut rng, &[4, 3], -1.0, 1.0);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                let rel = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                assert!(rel < 1e-10, "f64 associativity violated: {x} vs {y}");
            }
        }
    }

    #[test]
    fn gaussian_zero_std_is_constant() {
        let mut rng = Rng::new(9);
        let t = Tensor::<f32>::gaussian(&mut rng, &[17], 3.5, 0.0).unwrap();
        assert!(t.data().iter().all(|&x| x == 3.5));
    }

    #[test]
    fn gaussian_negative_std_rejected() {
        let mut rng = Rng::new(9);
        let err = Tensor::<f32>::gaussian(&mut rng, &[4], 0.0, -1.0).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn gaussian_fixed_seed_reproduces_bitwise() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        let ta = Tensor::<f32>::gaussian(&mut a, &[1000], 0.0, 1.0).unwrap();
        let tb = Tensor::<f32>::gaussian(&mut b, &[1000], 0.0, 1.0).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn gaussian_sample_statistics() {
        // Law of large numbers: 10^6 draws pin mean and std tightly.
        let mut rng = Rng::new(123);
        let t = Tensor::<f64>::gaussian(&mut rng, &[1_000_000], 0.0, 0.5).unwrap();
        let mean = t.mean();
        let var = t.data().iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>()
            / (t.len() - 1) as f64;
        assert!(mean.abs() < 0.005, "sample mean {mean}");
        assert!((var.sqrt() - 0.5).abs() < 0.005, "sample std {}", var.sqrt());
    }

    #[test]
    fn map_identity_and_zip_add() {
        let x = t32(&[2], &[1.0, 2.0]);
        assert_eq!(x.map(|t| t), x);
        let y = t32(&[2], &[3.0, 4.0]);
        assert_eq!(x.add(&y).unwrap().data(), &[4.0, 6.0]);
    }

    #[test]
    fn zip_shape_mismatch() {
        let x = t32(&[2], &[1.0, 2.0]);
        let y = t32(&[3], &[1.0, 2.0, 3.0]);
        assert!(matches!(
            x.zip(&y, |a, b| a + b),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn reduce_mean_arithmetic() {
        let x = t32(&[4], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(x.mean(), 2.5);
    }

    #[test]
    fn reshape_round_trip_is_bit_exact() {
        let mut rng = Rng::new(2);
        let img = Tensor::<f32>::uniform(&mut rng, &[28, 28, 1], 0.0, 1.0);
        let flat = img.reshape(&[784]).unwrap();
        let back = flat.reshape(&[28, 28, 1]).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn reshape_is_row_major() {
        let x = t32(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let flat = x.reshape(&[4]).unwrap();
        assert_eq!(flat.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn reshape_same_shape_identity() {
        let x = t32(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(x.reshape(&[2, 2]).unwrap(), x);
    }

    #[test]
    fn reshape_count_mismatch_rejected() {
        let x = t32(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            x.reshape(&[5]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn sum_axis0_collapses_rows() {
        let x = t32(&[2, 3], &[1.0, 2.0, 3.0, 10.0, 20.0, 30.0]);
        let s = x.sum_axis0().unwrap();
        assert_eq!(s.shape(), &[3]);
        assert_eq!(s.data(), &[11.0, 22.0, 33.0]);
    }

    #[test]
    fn finite_inputs_stay_finite() {
        // Randomized closure of the public ops over finite inputs.
        let mut rng = Rng::new(77);
        for _ in 0..50 {
            let a = Tensor::<f32>::uniform(&mut rng, &[6, 5], -100.0, 100.0);
            let b = Tensor::<f32>::uniform(&mut rng, &[5, 4], -100.0, 100.0);
            let c = Tensor::<f32>::uniform(&mut rng, &[6, 5], -100.0, 100.0);
            assert!(a.matmul(&b).unwrap().all_finite());
            assert!(a.add(&c).unwrap().all_finite());
            assert!(a.sub(&c).unwrap().all_finite());
            assert!(a.scale(3.25).all_finite());
            assert!(a.map(|x| x * x).all_finite());
            assert!(a.sum_axis0().unwrap().all_finite());
            assert!(a.transposed().unwrap().all_finite());
            assert!(a.reshape(&[30]).unwrap().all_finite());
            let g = Tensor::<f32>::gaussian(&mut rng, &[64], 0.0, 5.0).unwrap();
            assert!(g.all_finite());
        }
    }

    #[test]
    fn large_matmul_parallel_path_matches_sequential() {
        // Exceeds the parallel threshold; result must be identical bitwise.
        let mut rng = Rng::new(4);
        let a = Tensor::<f32>::uniform(&mut rng, &[64, 64], -1.0, 1.0);
        let b = Tensor::<f32>::uniform(&mut rng, &[64, 64], -1.0, 1.0);
        let big = a.matmul(&b).unwrap();
        let mut seq = vec![0.0f32; 64 * 64];
        for (i, out_row) in seq.chunks_mut(64).enumerate() {
            kernels::matmul_nn_row(&a.data()[i * 64..(i + 1) * 64], b.data(), out_row, 64);
        }
        assert_eq!(big.data(), seq.as_slice());
    }
}
