//! t-product algebra: t-product, conjugate transpose, t-SVD, ranks and TNN.
//!
//! Everything is computed slicewise in the Fourier domain. Only slices
//! `0..=I3/2` are factored; the rest are their complex conjugates.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fourier::{dft_mode3, idft_mode3_real, mirror_slice, unique_slices, ComplexSliceStack};
use crate::tensor::{mode_pairs, unfold_mode_pair, DenseTensor};

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Result of [`t_svd`]: `Z = U * S * V^H`.
#[derive(Debug, Clone)]
pub struct TubalFactorization {
    pub u: DenseTensor,
    pub s: DenseTensor,
    pub v: DenseTensor,
    /// Fourier-domain singular values, `min(I1, I2) x I3`, non-increasing per column.
    pub sigma: DMatrix<f64>,
}

impl TubalFactorization {
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        t_product(&t_product(&self.u, &self.s)?, &conj_transpose(&self.v)?)
    }
}

/// Thin SVD with singular values sorted non-increasing (stable on ties).
pub(crate) fn thin_svd<T>(m: DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    let svd = m.svd_unordered(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u_sorted = DMatrix::<T>::zeros(rows, r);
    let mut v_sorted = DMatrix::<T>::zeros(cols, r);
    let mut s_sorted = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v_t.row(src).adjoint());
        s_sorted.push(s[src]);
    }
    (u_sorted, s_sorted, v_sorted)
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Whether Fourier slice `k` of a real tensor is itself real.
fn self_conjugate(k: usize, n3: usize) -> bool {
    k == 0 || 2 * k == n3
}

/// Thin SVD of a Fourier slice; real slices use real arithmetic so the
/// factors stay real and the inverse transform is exact.
pub(crate) fn slice_svd(
    slice: &DMatrix<Complex64>,
    real: bool,
) -> (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) {
    if real {
        let (u, s, v) = thin_svd(slice.map(|c| c.re));
        (to_complex(&u), s, to_complex(&v))
    } else {
        thin_svd(slice.clone())
    }
}

fn complete_unitary<T>(u: DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let (m, r) = u.shape();
    if r == m {
        return u;
    }
    let mut aug = DMatrix::<T>::zeros(m, r + m);
    aug.columns_mut(0, r).copy_from(&u);
    aug.columns_mut(r, m).fill_with_identity();
    let q = aug.qr().q();
    let mut out = DMatrix::<T>::zeros(m, m);
    out.columns_mut(0, r).copy_from(&u);
    out.columns_mut(r, m - r).copy_from(&q.columns(r, m - r));
    out
}

/// Singular values of every Fourier slice, `min(I1, I2) x I3`.
pub fn fourier_singular_values(z: &DenseTensor) -> Result<DMatrix<f64>> {
    let (n1, n2, n3) = z.require_3way("fourier singular values")?;
    let zf = dft_mode3(z)?;
    let r = n1.min(n2);
    let cols: Vec<Vec<f64>> = (0..unique_slices(n3))
        .into_par_iter()
        .map(|k| {
            let slice = zf.slice(k);
            if self_conjugate(k, n3) {
                slice
                    .map(|c| c.re)
                    .singular_values_unordered()
                    .iter()
                    .copied()
                    .collect()
            } else {
                slice.singular_values_unordered().iter().copied().collect()
            }
        })
        .collect();
    let mut sigma = DMatrix::zeros(r, n3);
    for k in 0..n3 {
        let src = if k < cols.len() {
            k
        } else {
            mirror_slice(k, n3)
        };
        let mut col = cols[src].clone();
        col.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        for (j, v) in col.into_iter().enumerate() {
            sigma[(j, k)] = v;
        }
    }
    Ok(sigma)
}

/// Shrink the Fourier-domain singular values of `y` slice by slice.
///
/// `shrink(k, sigma)` receives the non-increasing singular values of unique
/// slice `k` and returns the replacements. Returns the reassembled tensor,
/// the original singular values and the shrunk ones (both `R x I3`).
pub(crate) fn map_fourier_spectrum<F>(
    y: &DenseTensor,
    shrink: F,
) -> Result<(DenseTensor, DMatrix<f64>, DMatrix<f64>)>
where
    F: Fn(usize, &[f64]) -> Vec<f64> + Sync,
{
    let (n1, n2, n3) = y.require_3way("spectral shrinkage")?;
    let r = n1.min(n2);
    let yf = dft_mode3(y)?;
    let parts: Vec<(DMatrix<Complex64>, Vec<f64>, Vec<f64>)> = (0..unique_slices(n3))
        .into_par_iter()
        .map(|k| {
            let (u, s, v) = slice_svd(&yf.slice(k), self_conjugate(k, n3));
            let shrunk = shrink(k, &s);
            debug_assert_eq!(shrunk.len(), s.len());
            let mut us = u;
            for (j, &sv) in shrunk.iter().enumerate() {
                us.column_mut(j).scale_mut(sv);
            }
            (us * v.adjoint(), s, shrunk)
        })
        .collect();
    let mut out = ComplexSliceStack::zeros([n1, n2, n3]);
    let mut sigma = DMatrix::zeros(r, n3);
    let mut shrunk = DMatrix::zeros(r, n3);
    for k in 0..n3 {
        let src = if k < parts.len() {
            k
        } else {
            mirror_slice(k, n3)
        };
        let (m, s, sh) = &parts[src];
        if k < parts.len() {
            out.set_slice(k, m);
        } else {
            out.set_slice(k, &m.map(|c| c.conj()));
        }
        for j in 0..r {
            sigma[(j, k)] = s[j];
            shrunk[(j, k)] = sh[j];
        }
    }
    Ok((idft_mode3_real(&out), sigma, shrunk))
}

/// t-product of `a` (I1 x I2 x I3) and `b` (I2 x J x I3).
pub fn t_product(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let (n1, n2, n3) = a.require_3way("t_product lhs")?;
    let (m2, j, m3) = b.require_3way("t_product rhs")?;
    if n2 != m2 || n3 != m3 {
        return invalid(format!(
            "t_product: incompatible shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        ));
    }
    let af = dft_mode3(a)?;
    let bf = dft_mode3(b)?;
    let prods: Vec<DMatrix<Complex64>> = (0..unique_slices(n3))
        .into_par_iter()
        .map(|k| af.slice(k) * bf.slice(k))
        .collect();
    let mut out = ComplexSliceStack::zeros([n1, j, n3]);
    for k in 0..n3 {
        if k < prods.len() {
            out.set_slice(k, &prods[k]);
        } else {
            out.set_slice(k, &prods[mirror_slice(k, n3)].map(|c| c.conj()));
        }
    }
    Ok(idft_mode3_real(&out))
}

/// Transpose every frontal slice and reverse the order of slices 2..I3.
pub fn conj_transpose(a: &DenseTensor) -> Result<DenseTensor> {
    let (n1, n2, n3) = a.require_3way("conj_transpose")?;
    let mut out = DenseTensor::zeros(&[n2, n1, n3])?;
    let data = out.data_mut();
    for k in 0..n3 {
        let src_k = if k == 0 { 0 } else { n3 - k };
        for i in 0..n1 {
            for j in 0..n2 {
                data[j + n2 * (i + n1 * k)] = a.at3(i, j, src_k);
            }
        }
    }
    Ok(out)
}

/// Full t-SVD with orthogonal `U` (I1 x I1 x I3) and `V` (I2 x I2 x I3).
pub fn t_svd(z: &DenseTensor) -> Result<TubalFactorization> {
    let (n1, n2, n3) = z.require_3way("t_svd")?;
    if !z.is_finite() {
        return invalid("t_svd: input has non-finite entries");
    }
    let r = n1.min(n2);
    let zf = dft_mode3(z)?;
    type Factors = (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>);
    let parts: Vec<Factors> = (0..unique_slices(n3))
        .into_par_iter()
        .map(|k| {
            let slice = zf.slice(k);
            if self_conjugate(k, n3) {
                let (u, s, v) = thin_svd(slice.map(|c| c.re));
                (
                    to_complex(&complete_unitary(u)),
                    s,
                    to_complex(&complete_unitary(v)),
                )
            } else {
                let (u, s, v) = thin_svd(slice);
                (complete_unitary(u), s, complete_unitary(v))
            }
        })
        .collect();
    let mut uf = ComplexSliceStack::zeros([n1, n1, n3]);
    let mut sf = ComplexSliceStack::zeros([n1, n2, n3]);
    let mut vf = ComplexSliceStack::zeros([n2, n2, n3]);
    let mut sigma = DMatrix::zeros(r, n3);
    for k in 0..n3 {
        let (src, conj) = if k < parts.len() {
            (k, false)
        } else {
            (mirror_slice(k, n3), true)
        };
        let (u, s, v) = &parts[src];
        let fix = |m: &DMatrix<Complex64>| if conj { m.map(|c| c.conj()) } else { m.clone() };
        uf.set_slice(k, &fix(u));
        vf.set_slice(k, &fix(v));
        let mut sm = DMatrix::<Complex64>::zeros(n1, n2);
        for j in 0..r {
            sm[(j, j)] = Complex64::new(s[j], 0.0);
            sigma[(j, k)] = s[j];
        }
        sf.set_slice(k, &sm);
    }
    Ok(TubalFactorization {
        u: idft_mode3_real(&uf),
        s: idft_mode3_real(&sf),
        v: idft_mode3_real(&vf),
        sigma,
    })
}

fn rank_threshold(sigma: &DMatrix<f64>) -> f64 {
    RANK_TOLERANCE * sigma.iter().fold(0.0f64, |m, &v| m.max(v))
}

/// Matrix rank of every Fourier slice.
pub fn multi_rank(z: &DenseTensor) -> Result<Vec<usize>> {
    let sigma = fourier_singular_values(z)?;
    let thr = rank_threshold(&sigma);
    Ok(sigma
        .column_iter()
        .map(|c| c.iter().filter(|&&v| v > thr && v > 0.0).count())
        .collect())
}

/// Number of nonzero singular tubes.
pub fn tubal_rank(z: &DenseTensor) -> Result<usize> {
    Ok(multi_rank(z)?.into_iter().max().unwrap_or(0))
}

/// Tensor nuclear norm: sum of all Fourier-slice singular values.
pub fn tnn(z: &DenseTensor) -> Result<f64> {
    Ok(fourier_singular_values(z)?.sum())
}

/// Tubal rank of every mode-(k1,k2) unfolding, pairs in lexicographic order.
pub fn n_tubal_rank(z: &DenseTensor) -> Result<Vec<usize>> {
    if z.ndim() < 2 {
        return invalid("n_tubal_rank needs a tensor with at least two modes");
    }
    mode_pairs(z.ndim())
        .into_iter()
        .map(|(k1, k2)| tubal_rank(&unfold_mode_pair(z, k1, k2)?))
        .collect()
}
