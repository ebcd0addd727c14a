//! Image-quality metrics computed per frontal slice (the first two modes)
//! and averaged over the remaining modes.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::tensor::DenseTensor;

type SlicePairs<'a> = Vec<(&'a [f64], &'a [f64])>;

fn slices<'a>(x: &'a DenseTensor, r: &'a DenseTensor) -> Result<(usize, usize, SlicePairs<'a>)> {
    x.require_same_shape(r, "metric inputs")?;
    if x.ndim() < 2 {
        return invalid("metrics need at least two modes");
    }
    let (h, w) = (x.shape()[0], x.shape()[1]);
    let plane = h * w;
    if plane == 0 {
        return invalid("metrics need non-empty frontal slices");
    }
    let pairs = x.data().chunks(plane).zip(r.data().chunks(plane)).collect();
    Ok((h, w, pairs))
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Mean over slices of `10 log10(peak² / MSE)`. Exactly reproduced slices
/// are left out of the mean; `+∞` when every slice is exact.
pub fn psnr(x: &DenseTensor, reference: &DenseTensor, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return invalid(format!("peak must be > 0, got {peak}"));
    }
    let (_, _, pairs) = slices(x, reference)?;
    let vals: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| mse(a, b))
        .filter(|&m| m > 0.0)
        .map(|m| 10.0 * (peak * peak / m).log10())
        .collect();
    if vals.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

fn ssim_slice(a: &[f64], b: &[f64], h: usize, w: usize, peak: f64) -> f64 {
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let (wh, ww) = (h.min(11), w.min(11));
    let gh = gaussian_window(wh, 1.5);
    let gw = gaussian_window(ww, 1.5);
    let mut total = 0.0;
    let mut count = 0usize;
    for j0 in 0..=(w - ww) {
        for i0 in 0..=(h - wh) {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (dj, &gj) in gw.iter().enumerate() {
                for (di, &gi) in gh.iter().enumerate() {
                    let k = (i0 + di) + (j0 + dj) * h;
                    let g = gi * gj;
                    let (x, y) = (a[k], b[k]);
                    mx += g * x;
                    my += g * y;
                    sxx += g * x * x;
                    syy += g * y * y;
                    sxy += g * x * y;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cxy = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Mean single-scale SSIM: 11×11 Gaussian window (σ = 1.5, smaller when a
/// slice is smaller), valid positions only, `C1 = (0.01 peak)²`,
/// `C2 = (0.03 peak)²`.
pub fn ssim(x: &DenseTensor, reference: &DenseTensor, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return invalid(format!("peak must be > 0, got {peak}"));
    }
    let (h, w, pairs) = slices(x, reference)?;
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|(a, b)| ssim_slice(a, b, h, w, peak))
        .collect();
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// `100 / ratio · sqrt(mean_b (RMSE_b / mean_b)²)` with bands the frontal
/// slices and `mean_b` taken from the reference.
pub fn ergas(x: &DenseTensor, reference: &DenseTensor, ratio: f64) -> Result<f64> {
    if !(ratio > 0.0) {
        return invalid(format!("ratio must be > 0, got {ratio}"));
    }
    let (_, _, pairs) = slices(x, reference)?;
    let mut acc = 0.0;
    for (b, (xs, rs)) in pairs.iter().enumerate() {
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        if mean == 0.0 {
            return invalid(format!("reference band {b} has zero mean"));
        }
        acc += mse(xs, rs) / (mean * mean);
    }
    Ok(100.0 / ratio * (acc / pairs.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(shape: &[usize]) -> DenseTensor {
        DenseTensor::from_fn(shape, |i| {
            0.1 + 0.8 * ((i[0] * 7 + i[1] * 3 + i[2]) % 11) as f64 / 10.0
        })
        .unwrap()
    }

    #[test]
    fn identical_inputs() {
        let x = ramp(&[16, 14, 3]);
        assert_eq!(psnr(&x, &x, 1.0).unwrap(), f64::INFINITY);
        assert!((ssim(&x, &x, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ergas(&x, &x, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn psnr_examples() {
        let r = DenseTensor::zeros(&[4, 4, 2]).unwrap();
        let x = DenseTensor::from_vec(&[4, 4, 2], vec![1.0; 32]).unwrap();
        assert!((psnr(&x, &r, 255.0).unwrap() - 48.130803608679).abs() < 1e-9);
        let img = ramp(&[8, 8, 2]);
        let off = img.map(|v| v + 0.1);
        assert!((psnr(&off, &img, 1.0).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn symmetry() {
        let a = ramp(&[12, 13, 2]);
        let b = a.map(|v| v * 0.9 + 0.05);
        assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
        assert!((ssim(&a, &b, 1.0).unwrap() - ssim(&b, &a, 1.0).unwrap()).abs() < 1e-14);
        assert_ne!(ergas(&a, &b, 1.0).unwrap(), ergas(&b, &a, 1.0).unwrap());
    }

    #[test]
    fn ssim_below_one_for_different_inputs() {
        let a = ramp(&[12, 12, 2]);
        let b = a.map(|v| 1.0 - v);
        let s = ssim(&a, &b, 1.0).unwrap();
        assert!((-1.0..1.0).contains(&s), "{s}");
    }

    #[test]
    fn errors() {
        let a = DenseTensor::zeros(&[3, 3, 2]).unwrap();
        let b = DenseTensor::zeros(&[3, 3, 3]).unwrap();
        assert!(psnr(&a, &b, 1.0).is_err());
        assert!(ergas(&a, &a, 1.0).is_err());
        assert!(psnr(&a, &a, 0.0).is_err());
    }
}
