//! DFT along the tubes (third mode) of a 3-way tensor.
//!
//! Forward transform is unnormalized; the inverse carries the 1/I3 factor.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::tensor::DenseTensor;

/// Frontal slices of a complex 3-way array, column-major like [`DenseTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSliceStack {
    shape: [usize; 3],
    data: Vec<Complex64>,
}

impl ComplexSliceStack {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); shape.iter().product()],
        }
    }

    pub fn from_real(t: &DenseTensor) -> Result<Self> {
        let (a, b, c) = t.require_3way("complex stack")?;
        Ok(Self {
            shape: [a, b, c],
            data: t.data().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[i + self.shape[0] * (j + self.shape[1] * k)]
    }

    /// Frontal slice `k` as a matrix.
    pub fn slice(&self, k: usize) -> DMatrix<Complex64> {
        let plane = self.shape[0] * self.shape[1];
        DMatrix::from_column_slice(
            self.shape[0],
            self.shape[1],
            &self.data[k * plane..(k + 1) * plane],
        )
    }

    pub fn set_slice(&mut self, k: usize, m: &DMatrix<Complex64>) {
        assert_eq!(m.shape(), (self.shape[0], self.shape[1]));
        let plane = self.shape[0] * self.shape[1];
        self.data[k * plane..(k + 1) * plane].copy_from_slice(m.as_slice());
    }

    /// Real part as a dense tensor.
    pub fn real_part(&self) -> DenseTensor {
        DenseTensor::from_vec(&self.shape, self.data.iter().map(|c| c.re).collect())
            .expect("stack shape is valid")
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }
}

/// Number of leading Fourier slices that determine the rest by conjugate symmetry.
pub fn unique_slices(n3: usize) -> usize {
    n3 / 2 + 1
}

/// Index of the slice that is the conjugate mirror of `k`.
pub fn mirror_slice(k: usize, n3: usize) -> usize {
    if k == 0 {
        0
    } else {
        n3 - k
    }
}

fn transform_tubes(stack: &mut ComplexSliceStack, inverse: bool) {
    let [n1, n2, n3] = stack.shape;
    if n3 == 1 {
        return;
    }
    let plane = n1 * n2;
    let fft = {
        let mut planner = FftPlanner::<f64>::new();
        if inverse {
            planner.plan_fft_inverse(n3)
        } else {
            planner.plan_fft_forward(n3)
        }
    };
    let scale = if inverse { 1.0 / n3 as f64 } else { 1.0 };
    // gather tubes into contiguous rows, transform, scatter back
    let mut tubes = vec![Complex64::new(0.0, 0.0); plane * n3];
    for k in 0..n3 {
        for p in 0..plane {
            tubes[p * n3 + k] = stack.data[k * plane + p];
        }
    }
    tubes.par_chunks_mut(n3 * 64.min(plane)).for_each(|chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
    for k in 0..n3 {
        for p in 0..plane {
            stack.data[k * plane + p] = tubes[p * n3 + k] * scale;
        }
    }
}

/// Unnormalized forward DFT along the third mode.
pub fn dft_mode3(z: &DenseTensor) -> Result<ComplexSliceStack> {
    let mut s = ComplexSliceStack::from_real(z)?;
    transform_tubes(&mut s, false);
    Ok(s)
}

/// Inverse DFT along the third mode (includes the 1/I3 factor).
pub fn idft_mode3(s: &ComplexSliceStack) -> ComplexSliceStack {
    let mut out = s.clone();
    transform_tubes(&mut out, true);
    out
}

/// Inverse DFT of a conjugate-symmetric stack, keeping the real part.
pub fn idft_mode3_real(s: &ComplexSliceStack) -> DenseTensor {
    idft_mode3(s).real_part()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_one_is_identity() {
        let t = DenseTensor::from_vec(&[2, 2, 1], vec![1.0, -2.0, 3.0, 4.5]).unwrap();
        let s = dft_mode3(&t).unwrap();
        assert_eq!(s.real_part(), t);
        assert_eq!(s.max_imag(), 0.0);
    }

    #[test]
    fn constant_tube_goes_to_dc() {
        let t = DenseTensor::from_vec(&[1, 1, 5], vec![2.0; 5]).unwrap();
        let s = dft_mode3(&t).unwrap();
        assert!((s.get(0, 0, 0).re - 10.0).abs() < 1e-12);
        for k in 1..5 {
            assert!(s.get(0, 0, k).norm() < 1e-12);
        }
    }

    #[test]
    fn mirror_indices() {
        assert_eq!(unique_slices(1), 1);
        assert_eq!(unique_slices(4), 3);
        assert_eq!(unique_slices(5), 3);
        assert_eq!(mirror_slice(1, 5), 4);
        assert_eq!(mirror_slice(0, 5), 0);
    }
}
