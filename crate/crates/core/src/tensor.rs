//! Dense row-major numeric arrays.
//!
//! `Tensor` is deliberately small: the handful of primitives the layers need,
//! with a fixed summation order so results are reproducible bit for bit under
//! a fixed seed. Broadcasting is restricted to "vector against the last axis",
//! the only case the model uses; anything fancier is rejected.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Element type of a tensor. `f64` is the reference path (finite-difference
/// validation needs the headroom); `f32` is an opt-in speed mode.
pub trait Scalar:
    num_traits::Float + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    const DTYPE: Dtype;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f64 {
    const DTYPE: Dtype = Dtype::F64;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes per f64"))
    }
}

impl Scalar for f32 {
    const DTYPE: Dtype = Dtype::F32;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes per f32"))
    }
}

/// On-disk element type tag used by checkpoints and caches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn byte_width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShapeError {
    #[error("shape {shape:?} implies {expected} elements, got {actual}")]
    DataMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("shape {0:?} contains a zero extent")]
    ZeroExtent(Vec<usize>),
    #[error("dimension mismatch between shapes {left:?} and {right:?}")]
    DimMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("axis {axis} out of range for rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },
    #[error("expected rank {expected}, got shape {shape:?}")]
    RankMismatch { expected: usize, shape: Vec<usize> },
}

/// Dense row-major array, rank 1 to 3 in practice (samples x time x features).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self, ShapeError> {
        if shape.iter().any(|&e| e == 0) {
            return Err(ShapeError::ZeroExtent(shape));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(ShapeError::DataMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: T) -> Self {
        let len = shape.iter().product();
        assert!(shape.iter().all(|&e| e > 0), "zero extent in {shape:?}");
        Self {
            shape,
            data: vec![value; len],
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        Self::filled(shape, T::zero())
    }

    pub fn ones(shape: Vec<usize>) -> Self {
        Self::filled(shape, T::one())
    }

    /// Square identity matrix.
    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    /// Rank-2 tensor from rows; all rows must be equally long.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| T::from_f64(v)))
            .collect();
        Self::new(vec![n, m], data).expect("consistent row shape")
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        let data: Vec<T> = values.into_iter().map(T::from_f64).collect();
        let len = data.len();
        Self::new(vec![len], data).expect("rank-1 shape")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
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

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn dims2(&self) -> Result<(usize, usize), ShapeError> {
        match self.shape[..] {
            [a, b] => Ok((a, b)),
            _ => Err(ShapeError::RankMismatch {
                expected: 2,
                shape: self.shape.clone(),
            }),
        }
    }

    pub fn dims3(&self) -> Result<(usize, usize, usize), ShapeError> {
        match self.shape[..] {
            [a, b, c] => Ok((a, b, c)),
            _ => Err(ShapeError::RankMismatch {
                expected: 3,
                shape: self.shape.clone(),
            }),
        }
    }

    /// Reinterprets the data under a new shape with the same element count.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self, ShapeError> {
        if shape.iter().any(|&e| e == 0) {
            return Err(ShapeError::ZeroExtent(shape));
        }
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(ShapeError::DataMismatch {
                shape,
                expected,
                actual: self.data.len(),
            });
        }
        self.shape = shape;
        Ok(self)
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> T {
        let (_, cols) = (self.shape[0], self.shape[1]);
        self.data[i * cols + j]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> T {
        let (d1, d2) = (self.shape[1], self.shape[2]);
        self.data[(i * d1 + j) * d2 + k]
    }

    /// Matrix product of two rank-2 tensors. Accumulation runs over the inner
    /// index in ascending order for every output element, which pins the
    /// floating-point result.
    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        let (m, k) = self.dims2()?;
        let (k2, n) = other.dims2()?;
        if k != k2 {
            return Err(ShapeError::DimMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let o_row = &mut out[i * n..(i + 1) * n];
            for (kk, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[kk * n..(kk + 1) * n];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Tensor::new(vec![m, n], out)
    }

    /// Rank-2 transpose.
    pub fn transpose(&self) -> Result<Tensor<T>, ShapeError> {
        let (m, n) = self.dims2()?;
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Tensor::new(vec![n, m], out)
    }

    /// Element-wise product. `other` must either match `self`'s shape exactly
    /// or be a vector matched against the last axis.
    pub fn hadamard(&self, other: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        if self.shape == other.shape {
            let data = self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a * b)
                .collect();
            return Tensor::new(self.shape.clone(), data);
        }
        let last = *self.shape.last().expect("non-empty shape");
        if other.rank() == 1 && other.shape[0] == last {
            let mut data = Vec::with_capacity(self.data.len());
            for chunk in self.data.chunks_exact(last) {
                for (a, b) in chunk.iter().zip(&other.data) {
                    data.push(*a * *b);
                }
            }
            return Tensor::new(self.shape.clone(), data);
        }
        Err(ShapeError::DimMismatch {
            left: self.shape.clone(),
            right: other.shape.clone(),
        })
    }

    /// Row-wise softmax of a rank-2 tensor, computed with max subtraction so
    /// large logits cannot overflow.
    pub fn softmax_rows(&self) -> Tensor<T> {
        let (m, n) = self.dims2().expect("softmax_rows needs a rank-2 tensor");
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            let row = &self.data[i * n..(i + 1) * n];
            let max = row.iter().cloned().fold(row[0], T::max);
            let o_row = &mut out[i * n..(i + 1) * n];
            let mut sum = T::zero();
            for (o, &v) in o_row.iter_mut().zip(row) {
                let e = (v - max).exp();
                *o = e;
                sum = sum + e;
            }
            for o in o_row.iter_mut() {
                *o = *o / sum;
            }
        }
        Tensor::new(vec![m, n], out).expect("same shape as input")
    }

    /// Arithmetic mean along `axis`; output rank drops by one.
    pub fn mean_over_axis(&self, axis: usize) -> Result<Tensor<T>, ShapeError> {
        if axis >= self.rank() {
            return Err(ShapeError::AxisOutOfRange {
                axis,
                rank: self.rank(),
            });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let extent = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for j in 0..extent {
                let base = (o * extent + j) * inner;
                let o_base = o * inner;
                for i in 0..inner {
                    out[o_base + i] = out[o_base + i] + self.data[base + i];
                }
            }
        }
        let denom = T::from_f64(extent as f64);
        for v in &mut out {
            *v = *v / denom;
        }
        let mut shape: Vec<usize> = self.shape.clone();
        shape.remove(axis);
        if shape.is_empty() {
            shape.push(1);
        }
        Tensor::new(shape, out)
    }

    /// The rank-2 time slice `[n_sm, features]` at step `t` of a rank-3
    /// `[n_sm, steps, features]` tensor.
    pub fn time_slice(&self, t: usize) -> Result<Tensor<T>, ShapeError> {
        let (n, steps, f) = self.dims3()?;
        assert!(t < steps, "time step {t} out of {steps}");
        let mut data = Vec::with_capacity(n * f);
        for s in 0..n {
            let base = (s * steps + t) * f;
            data.extend_from_slice(&self.data[base..base + f]);
        }
        Tensor::new(vec![n, f], data)
    }

    /// Concatenates rank-3 tensors along the feature (last) axis.
    pub fn concat_features(parts: &[&Tensor<T>]) -> Result<Tensor<T>, ShapeError> {
        assert!(!parts.is_empty(), "nothing to concatenate");
        let (n, steps, _) = parts[0].dims3()?;
        let mut total = 0;
        for p in parts {
            let (pn, ps, pf) = p.dims3()?;
            if pn != n || ps != steps {
                return Err(ShapeError::DimMismatch {
                    left: parts[0].shape.clone(),
                    right: p.shape.clone(),
                });
            }
            total += pf;
        }
        let mut data = Vec::with_capacity(n * steps * total);
        for s in 0..n {
            for t in 0..steps {
                for p in parts {
                    let f = p.shape[2];
                    let base = (s * steps + t) * f;
                    data.extend_from_slice(&p.data[base..base + f]);
                }
            }
        }
        Tensor::new(vec![n, steps, total], data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: T) -> Tensor<T> {
        self.map(|v| v * factor)
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        if self.shape != other.shape {
            return Err(ShapeError::DimMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Tensor::new(self.shape.clone(), data)
    }

    pub fn add_assign(&mut self, other: &Tensor<T>) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute element difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Tensor<T>) -> f64 {
        assert_eq!(self.shape, other.shape, "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs().to_f64())
            .fold(0.0, f64::max)
    }

    /// Converts element type, rounding through `f64`.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t2(rows: &[Vec<f64>]) -> Tensor<f64> {
        Tensor::from_rows(rows)
    }

    #[test]
    fn matmul_identity_is_exact() {
        let a = t2(&[vec![5.0, 6.0], vec![7.0, 8.0]]);
        let i = Tensor::<f64>::eye(2);
        assert_eq!(i.matmul(&a).unwrap(), a);
        assert_eq!(a.matmul(&i).unwrap(), a);
    }

    // Brute-force triple-loop reference used to freeze expected values.
    fn matmul_oracle(a: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
        let (m, k) = a.dims2().unwrap();
        let (_, n) = b.dims2().unwrap();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for kk in 0..k {
                    out[i * n + j] += a.at2(i, kk) * b.at2(kk, j);
                }
            }
        }
        out
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let a = t2(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = t2(&[vec![5.0], vec![6.0]]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[2, 1]);
        assert_eq!(c.data(), &[17.0, 39.0]);
        assert_eq!(c.data(), matmul_oracle(&a, &b).as_slice());
    }

    #[test]
    fn matmul_zero_annihilates() {
        let z = Tensor::<f64>::zeros(vec![3, 2]);
        let b = t2(&[vec![1.0, -2.0, 0.5], vec![4.0, 9.0, -1.0]]);
        let c = z.matmul(&b).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matmul_rejects_mismatched_inner_extents() {
        let a = Tensor::<f64>::zeros(vec![2, 3]);
        let b = Tensor::<f64>::zeros(vec![2, 2]);
        let err = a.matmul(&b).unwrap_err();
        assert_eq!(
            err,
            ShapeError::DimMismatch {
                left: vec![2, 3],
                right: vec![2, 2],
            }
        );
        // Both shapes must be named in the message.
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[2, 2]"), "{msg}");
    }

    #[test]
    fn hadamard_examples() {
        let x = Tensor::<f64>::from_vec(vec![1.0, 2.0]);
        let y = Tensor::<f64>::from_vec(vec![3.0, 4.0]);
        assert_eq!(x.hadamard(&y).unwrap().data(), &[3.0, 8.0]);

        let ones = Tensor::<f64>::ones(vec![2]);
        assert_eq!(x.hadamard(&ones).unwrap(), x);

        let zeros = Tensor::<f64>::zeros(vec![2]);
        assert!(x.hadamard(&zeros).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hadamard_broadcasts_vector_over_last_axis() {
        let x = Tensor::<f64>::new(vec![2, 2, 2], vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        let v = Tensor::<f64>::from_vec(vec![10.0, 100.0]);
        let y = x.hadamard(&v).unwrap();
        assert_eq!(y.data(), &[10., 200., 30., 400., 50., 600., 70., 800.]);
    }

    #[test]
    fn hadamard_rejects_incompatible_shapes() {
        let x = Tensor::<f64>::zeros(vec![2, 3]);
        let y = Tensor::<f64>::zeros(vec![2]);
        assert!(matches!(
            x.hadamard(&y),
            Err(ShapeError::DimMismatch { .. })
        ));
    }

    #[test]
    fn softmax_examples() {
        let z = t2(&[vec![0.0, 0.0]]);
        assert_eq!(z.softmax_rows().data(), &[0.5, 0.5]);

        // exp(ln 1) = 1 and exp(ln 3) = 3, so the row normalizes to 1/4, 3/4.
        let l = t2(&[vec![0.0, 3.0f64.ln()]]);
        let s = l.softmax_rows();
        assert!((s.data()[0] - 0.25).abs() < 1e-15);
        assert!((s.data()[1] - 0.75).abs() < 1e-15);

        // Shift invariance keeps huge logits finite.
        let big = t2(&[vec![1000.0, 1000.0]]);
        assert_eq!(big.softmax_rows().data(), &[0.5, 0.5]);
    }

    #[test]
    fn mean_over_axis_examples() {
        let a = t2(&[vec![1.0, 3.0], vec![5.0, 7.0]]);
        assert_eq!(a.mean_over_axis(0).unwrap().data(), &[3.0, 5.0]);

        let c = Tensor::<f64>::filled(vec![3, 4], 2.5);
        let m = c.mean_over_axis(1).unwrap();
        assert_eq!(m.shape(), &[3]);
        assert!(m.data().iter().all(|&v| v == 2.5));

        // Axis of extent 1 squeezes without changing values.
        let one = Tensor::<f64>::new(vec![2, 1, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let m = one.mean_over_axis(1).unwrap();
        assert_eq!(m.shape(), &[2, 3]);
        assert_eq!(m.data(), &[1., 2., 3., 4., 5., 6.]);
    }

    #[test]
    fn mean_over_axis_rejects_bad_axis() {
        let a = Tensor::<f64>::zeros(vec![2, 2]);
        assert_eq!(
            a.mean_over_axis(2).unwrap_err(),
            ShapeError::AxisOutOfRange { axis: 2, rank: 2 }
        );
    }

    #[test]
    fn new_checks_invariants() {
        assert!(matches!(
            Tensor::<f64>::new(vec![2, 3], vec![0.0; 5]),
            Err(ShapeError::DataMismatch { .. })
        ));
        assert!(matches!(
            Tensor::<f64>::new(vec![2, 0], vec![]),
            Err(ShapeError::ZeroExtent(_))
        ));
    }

    #[test]
    fn time_slice_and_concat_roundtrip() {
        let x = Tensor::<f64>::new(vec![2, 2, 2], vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        let s0 = x.time_slice(0).unwrap();
        assert_eq!(s0.data(), &[1., 2., 5., 6.]);
        let y = Tensor::concat_features(&[&x, &x]).unwrap();
        assert_eq!(y.shape(), &[2, 2, 4]);
        assert_eq!(&y.data()[..4], &[1., 2., 1., 2.]);
    }

    proptest! {
        // Logits stay inside +-15 so no probability can round all the way to
        // 0 or 1; past ~36 apart the competitors drop below machine epsilon.
        #[test]
        fn softmax_rows_are_stochastic_and_shift_invariant(
            rows in proptest::collection::vec(
                proptest::collection::vec(-15.0f64..15.0, 4), 1..6),
            shift in -10.0f64..10.0,
        ) {
            let a = Tensor::<f64>::from_rows(&rows);
            let s = a.softmax_rows();
            let (m, n) = s.dims2().unwrap();
            for i in 0..m {
                let row = &s.data()[i * n..(i + 1) * n];
                prop_assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
                let sum: f64 = row.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
            let shifted = a.map(|v| v + shift).softmax_rows();
            prop_assert!(s.max_abs_diff(&shifted) < 1e-12);
        }

        #[test]
        fn hadamard_commutes(
            vals in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..32)
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
            let a = Tensor::<f64>::from_vec(a);
            let b = Tensor::<f64>::from_vec(b);
            prop_assert_eq!(a.hadamard(&b).unwrap(), b.hadamard(&a).unwrap());
        }

        #[test]
        fn mean_of_ones_is_ones(
            n in 1usize..5, t in 1usize..7, f in 1usize..5, axis in 0usize..3
        ) {
            let x = Tensor::<f64>::ones(vec![n, t, f]);
            let m = x.mean_over_axis(axis).unwrap();
            prop_assert!(m.data().iter().all(|&v| v == 1.0));
        }
    }
}
