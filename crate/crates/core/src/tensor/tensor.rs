use alloc::vec;
use alloc::vec::Vec;

use crate::error::shape_err;
use crate::Result;

/// Row-major n-dimensional array of `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(shape_err!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            ));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self, axis: usize) -> usize {
        self.shape[axis]
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(shape_err!("cannot reshape {:?} into {shape:?}", self.shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(shape_err!(
                "elementwise {:?} vs {:?}",
                self.shape,
                other.shape
            ));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Elements per index of axis 0.
    pub fn row_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    /// Concatenate along axis 0; trailing dimensions must agree.
    pub fn concat(parts: &[&Tensor]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| shape_err!("concat of nothing"))?;
        let tail = &first.shape[1..];
        let mut lead = 0;
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            if &p.shape[1..] != tail {
                return Err(shape_err!("concat {:?} with {:?}", first.shape, p.shape));
            }
            lead += p.shape[0];
            data.extend_from_slice(&p.data);
        }
        let mut shape = first.shape.clone();
        shape[0] = lead;
        Ok(Self { shape, data })
    }

    /// Rows `start..start+len` of axis 0.
    pub fn narrow(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.shape[0] {
            return Err(shape_err!("narrow {start}+{len} of {:?}", self.shape));
        }
        let row = self.row_len();
        let mut shape = self.shape.clone();
        shape[0] = len;
        Ok(Self {
            shape,
            data: self.data[start * row..(start + len) * row].to_vec(),
        })
    }

    /// Slice `start..start+len` of the last axis of a rank-3 tensor.
    pub fn narrow_last(&self, start: usize, len: usize) -> Result<Self> {
        let [c, t, f] = self.dims3()?;
        if start + len > f {
            return Err(shape_err!("narrow_last {start}+{len} of {:?}", self.shape));
        }
        let mut data = Vec::with_capacity(c * t * len);
        for row in self.data.chunks_exact(f) {
            data.extend_from_slice(&row[start..start + len]);
        }
        Ok(Self {
            shape: vec![c, t, len],
            data,
        })
    }

    /// `[C, T, F] -> [C*F, T]`, row index `c*F + f`.
    pub fn flatten_freq(&self) -> Result<Self> {
        let [c, t, f] = self.dims3()?;
        let mut out = vec![0.0; c * t * f];
        for ci in 0..c {
            for ti in 0..t {
                for fi in 0..f {
                    out[(ci * f + fi) * t + ti] = self.data[(ci * t + ti) * f + fi];
                }
            }
        }
        Ok(Self {
            shape: vec![c * f, t],
            data: out,
        })
    }

    /// Inverse of [`flatten_freq`](Self::flatten_freq).
    pub fn unflatten_freq(&self, channels: usize) -> Result<Self> {
        let [rows, t] = self.dims2()?;
        if channels == 0 || rows % channels != 0 {
            return Err(shape_err!(
                "cannot split {rows} rows into {channels} channels"
            ));
        }
        let f = rows / channels;
        let mut out = vec![0.0; rows * t];
        for ci in 0..channels {
            for ti in 0..t {
                for fi in 0..f {
                    out[(ci * t + ti) * f + fi] = self.data[(ci * f + fi) * t + ti];
                }
            }
        }
        Ok(Self {
            shape: vec![channels, t, f],
            data: out,
        })
    }

    pub fn dims2(&self) -> Result<[usize; 2]> {
        match self.shape[..] {
            [a, b] => Ok([a, b]),
            _ => Err(shape_err!("expected rank 2, got {:?}", self.shape)),
        }
    }

    pub fn dims3(&self) -> Result<[usize; 3]> {
        match self.shape[..] {
            [a, b, c] => Ok([a, b, c]),
            _ => Err(shape_err!("expected rank 3, got {:?}", self.shape)),
        }
    }

    /// Time length: axis 1 of `[C, T]` or `[C, T, F]`.
    pub fn frames(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(0)
    }

    /// Concatenate along the time axis (axis 1); other axes must agree.
    pub fn concat_time(a: &Tensor, b: &Tensor) -> Result<Self> {
        if a.rank() != b.rank()
            || a.rank() < 2
            || a.shape[0] != b.shape[0]
            || a.shape[2..] != b.shape[2..]
        {
            return Err(shape_err!("time concat {:?} with {:?}", a.shape, b.shape));
        }
        let inner: usize = a.shape[2..].iter().product();
        let (ta, tb) = (a.shape[1], b.shape[1]);
        let mut data = Vec::with_capacity(a.len() + b.len());
        for c in 0..a.shape[0] {
            data.extend_from_slice(&a.data[c * ta * inner..(c + 1) * ta * inner]);
            data.extend_from_slice(&b.data[c * tb * inner..(c + 1) * tb * inner]);
        }
        let mut shape = a.shape.clone();
        shape[1] = ta + tb;
        Ok(Self { shape, data })
    }

    /// Last `n` frames along axis 1 (zero-filled on the left if shorter).
    pub fn tail_time(&self, n: usize) -> Self {
        let t = self.shape[1];
        let inner: usize = self.shape[2..].iter().product();
        let mut shape = self.shape.clone();
        shape[1] = n;
        let mut data = vec![0.0; self.shape[0] * n * inner];
        let keep = n.min(t);
        for c in 0..self.shape[0] {
            let src = &self.data[(c * t + t - keep) * inner..(c * t + t) * inner];
            let dst_start = (c * n + n - keep) * inner;
            data[dst_start..dst_start + keep * inner].copy_from_slice(src);
        }
        Self { shape, data }
    }
}
