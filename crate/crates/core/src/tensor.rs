//! Dense N-way tensors stored column-major (first index fastest), and the
//! mode-k1k2 unfolding that maps an N-way tensor onto a 3-way one.

use crate::error::{invalid, Result};

/// Dense real tensor with column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        })
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        check_shape(shape)?;
        let n: usize = shape.iter().product();
        if data.len() != n {
            return invalid(format!(
                "data length {} does not match shape {:?} ({} entries)",
                data.len(),
                shape,
                n
            ));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            advance(&mut idx, shape);
        }
        Ok(t)
    }

    /// The 3-way identity tensor: first frontal slice is the identity matrix.
    pub fn identity(n: usize, tubes: usize) -> Result<Self> {
        let mut t = Self::zeros(&[n, n, tubes])?;
        for i in 0..n {
            t.data[i + n * i] = 1.0;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
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

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &n) in idx.iter().zip(&self.shape) {
            debug_assert!(i < n);
            lin += i * stride;
            stride *= n;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let lin = self.linear_index(idx);
        self.data[lin] = v;
    }

    /// Entry (i, j, k) of a 3-way tensor.
    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[i + self.shape[0] * (j + self.shape[1] * k)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn require_3way(&self, what: &str) -> Result<(usize, usize, usize)> {
        if self.shape.len() != 3 {
            return invalid(format!(
                "{what}: expected a 3-way tensor, got shape {:?}",
                self.shape
            ));
        }
        Ok((self.shape[0], self.shape[1], self.shape[2]))
    }

    pub fn require_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.shape != other.shape {
            return invalid(format!(
                "{what}: shape mismatch {:?} vs {:?}",
                self.shape, other.shape
            ));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-abs difference; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Frobenius norm of the difference; panics on shape mismatch.
    pub fn frobenius_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// ‖self − other‖_F / ‖other‖_F, with the denominator floored at 1e-300.
    pub fn relative_error(&self, reference: &Self) -> f64 {
        self.frobenius_diff(reference) / reference.frobenius_norm().max(1e-300)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination; panics on shape mismatch.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.shape, other.shape);
        Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Return a tensor with the same data and a new shape of equal size.
    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Self::from_vec(shape, self.data)
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return invalid("tensor shape must have at least one extent");
    }
    if shape.contains(&0) {
        return invalid(format!("tensor extents must be positive, got {shape:?}"));
    }
    let mut total: usize = 1;
    for &n in shape {
        total = match total.checked_mul(n) {
            Some(t) => t,
            None => return invalid(format!("tensor shape {shape:?} overflows")),
        };
    }
    Ok(())
}

/// Column-major odometer step.
#[inline]
pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) {
    for (i, &n) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

/// All pairs (k1, k2), 0-based, with k1 < k2, in lexicographic order.
pub fn mode_pairs(ndim: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(ndim * ndim.saturating_sub(1) / 2);
    for k1 in 0..ndim {
        for k2 in k1 + 1..ndim {
            pairs.push((k1, k2));
        }
    }
    pairs
}

/// Shape of the mode-(k1,k2) unfolding: (I_k1, I_k2, product of the rest).
pub fn unfolded_shape(shape: &[usize], k1: usize, k2: usize) -> Result<[usize; 3]> {
    if k1 >= k2 || k2 >= shape.len() {
        return invalid(format!(
            "mode pair ({k1}, {k2}) is not admissible for a {}-way tensor (need k1 < k2 < N, 0-based)",
            shape.len()
        ));
    }
    let rest: usize = shape
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != k1 && m != k2)
        .map(|(_, &n)| n)
        .product();
    Ok([shape[k1], shape[k2], rest])
}

/// Position of every source mode in the unfolded linear index.
fn unfold_strides(shape: &[usize], k1: usize, k2: usize) -> Vec<usize> {
    let plane = shape[k1] * shape[k2];
    let mut strides = vec![0usize; shape.len()];
    let mut j_stride = 1;
    for (m, s) in strides.iter_mut().enumerate() {
        if m == k1 {
            *s = 1;
        } else if m == k2 {
            *s = shape[k1];
        } else {
            *s = plane * j_stride;
            j_stride *= shape[m];
        }
    }
    strides
}

/// Mode-(k1,k2) unfolding (0-based modes). Element (i_1..i_N) lands at
/// (i_k1, i_k2, j) where j enumerates the remaining modes column-major.
pub fn unfold_mode_pair(t: &DenseTensor, k1: usize, k2: usize) -> Result<DenseTensor> {
    let out_shape = unfolded_shape(&t.shape, k1, k2)?;
    let strides = unfold_strides(&t.shape, k1, k2);
    let mut out = vec![0.0; t.len()];
    let mut idx = vec![0usize; t.ndim()];
    for &v in &t.data {
        let pos: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out[pos] = v;
        advance(&mut idx, &t.shape);
    }
    DenseTensor::from_vec(&out_shape, out)
}

/// Inverse of [`unfold_mode_pair`].
pub fn fold_mode_pair(
    t3: &DenseTensor,
    k1: usize,
    k2: usize,
    original_shape: &[usize],
) -> Result<DenseTensor> {
    let expect = unfolded_shape(original_shape, k1, k2)?;
    if t3.shape() != expect {
        return invalid(format!(
            "fold: unfolded shape {:?} does not match {:?} expected for {:?} and pair ({k1}, {k2})",
            t3.shape(),
            expect,
            original_shape
        ));
    }
    let strides = unfold_strides(original_shape, k1, k2);
    let mut out = vec![0.0; t3.len()];
    let mut idx = vec![0usize; original_shape.len()];
    for v in out.iter_mut() {
        let pos: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        *v = t3.data[pos];
        advance(&mut idx, original_shape);
    }
    DenseTensor::from_vec(original_shape, out)
}
