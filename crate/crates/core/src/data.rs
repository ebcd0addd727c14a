//! Synthetic instances: low-tubal-rank tensors, sampling masks and mixed
//! salt-and-pepper plus Gaussian noise. Every generator is a pure function
//! of its parameters and seed (see [`crate::rng`] for the draw order).

use crate::algebra::t_product;
use crate::error::{invalid, Result};
use crate::rng::SplitMix64;
use crate::tensor::DenseTensor;

/// Random tensor of tubal rank at most `rank` in its first two modes.
///
/// Draws an `I1 x r x I3'` factor and then an `r x I2 x I3'` factor, entries
/// standard normal in column-major order, where `I3'` is the product of the
/// extents past the second. Their t-product is reshaped to `shape`.
pub fn gen_lowrank(shape: &[usize], rank: usize, seed: u64) -> Result<DenseTensor> {
    if shape.len() < 2 {
        return invalid("gen_lowrank needs at least two modes");
    }
    let (n1, n2) = (shape[0], shape[1]);
    let n3: usize = shape.iter().skip(2).product();
    if rank > n1.min(n2) {
        return invalid(format!("rank {rank} exceeds min(I1, I2) = {}", n1.min(n2)));
    }
    if rank == 0 {
        return DenseTensor::zeros(shape);
    }
    let mut rng = SplitMix64::new(seed);
    let a: Vec<f64> = (0..n1 * rank * n3).map(|_| rng.next_normal()).collect();
    let b: Vec<f64> = (0..rank * n2 * n3).map(|_| rng.next_normal()).collect();
    let a = DenseTensor::from_vec(&[n1, rank, n3], a)?;
    let b = DenseTensor::from_vec(&[rank, n2, n3], b)?;
    t_product(&a, &b)?.reshape(shape)
}

/// Affine map onto `[0, 1]`; a constant tensor maps to zeros.
pub fn rescale_unit(t: &DenseTensor) -> DenseTensor {
    let lo = t.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        t.map(|v| (v - lo) / (hi - lo))
    } else {
        t.map(|_| 0.0)
    }
}

/// Set of observed entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    shape: Vec<usize>,
    observed: Vec<bool>,
    pub sampling_rate: f64,
    pub seed: u64,
}

impl SamplingMask {
    pub fn full(shape: &[usize]) -> Result<Self> {
        let n = DenseTensor::zeros(shape)?.len();
        Ok(Self {
            shape: shape.to_vec(),
            observed: vec![true; n],
            sampling_rate: 1.0,
            seed: 0,
        })
    }

    pub fn from_bools(shape: &[usize], observed: Vec<bool>) -> Result<Self> {
        let n = DenseTensor::zeros(shape)?.len();
        if observed.len() != n {
            return invalid("mask length does not match shape");
        }
        let count = observed.iter().filter(|&&b| b).count();
        Ok(Self {
            shape: shape.to_vec(),
            observed,
            sampling_rate: count as f64 / n as f64,
            seed: 0,
        })
    }

    /// Nonzero entries are observed.
    pub fn from_tensor(t: &DenseTensor) -> Self {
        Self::from_bools(t.shape(), t.data().iter().map(|&v| v != 0.0).collect())
            .expect("tensor shape is valid")
    }

    pub fn to_tensor(&self) -> DenseTensor {
        DenseTensor::from_vec(
            &self.shape,
            self.observed
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        )
        .expect("mask shape is valid")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    /// Keep observed entries and zero the rest.
    pub fn project(&self, t: &DenseTensor) -> DenseTensor {
        assert_eq!(t.shape(), self.shape.as_slice());
        let data = t
            .data()
            .iter()
            .zip(&self.observed)
            .map(|(&v, &o)| if o { v } else { 0.0 })
            .collect();
        DenseTensor::from_vec(&self.shape, data).expect("mask shape is valid")
    }
}

/// Uniform sampling without replacement of exactly `round(sr · numel)` entries,
/// by a partial Fisher-Yates shuffle of the linear indices.
pub fn gen_mask(shape: &[usize], sr: f64, seed: u64) -> Result<SamplingMask> {
    if !(sr > 0.0 && sr <= 1.0) {
        return invalid(format!("sampling rate must be in (0, 1], got {sr}"));
    }
    let n = DenseTensor::zeros(shape)?.len();
    let k = ((sr * n as f64).round() as usize).min(n);
    let mut rng = SplitMix64::new(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.next_below((n - i) as u64) as usize;
        perm.swap(i, j);
    }
    let mut observed = vec![false; n];
    for &p in &perm[..k] {
        observed[p] = true;
    }
    Ok(SamplingMask {
        shape: shape.to_vec(),
        observed,
        sampling_rate: sr,
        seed,
    })
}

/// Mixed noise: Gaussian everywhere, then salt-and-pepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Fraction of entries forced to 0 or 1.
    pub sp_fraction: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub gaussian_sigma: f64,
    /// Draw the salt-and-pepper fraction per frontal slice from `U(lo, hi)`.
    pub noniid: Option<(f64, f64)>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sp_fraction) {
            return invalid(format!(
                "salt-and-pepper fraction must be in [0, 1), got {}",
                self.sp_fraction
            ));
        }
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return invalid(format!(
                "Gaussian sigma must be finite and >= 0, got {}",
                self.gaussian_sigma
            ));
        }
        if let Some((lo, hi)) = self.noniid {
            if !(0.0 <= lo && lo <= hi && hi < 1.0) {
                return invalid(format!(
                    "non-iid range must satisfy 0 <= lo <= hi < 1, got ({lo}, {hi})"
                ));
            }
        }
        Ok(())
    }
}

/// Corrupt `z` (expected in `[0, 1]`).
///
/// Draw order: in non-iid mode one uniform per frontal slice (slices of the
/// first two modes, in storage order) fixes that slice's fraction. Then, per
/// entry in storage order: one normal if `gaussian_sigma > 0`; one uniform
/// `u` if the fraction is positive, and when `u` falls below it, one more
/// uniform `b` selecting `0` (`b < 0.5`) or `1`.
pub fn add_mixed_noise(z: &DenseTensor, spec: &NoiseSpec) -> Result<DenseTensor> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let plane = z.shape()[0] * z.shape().get(1).copied().unwrap_or(1);
    let slices = z.len() / plane;
    let fractions: Vec<f64> = match spec.noniid {
        Some((lo, hi)) => (0..slices).map(|_| rng.next_range(lo, hi)).collect(),
        None => vec![spec.sp_fraction; slices],
    };
    let mut out = z.clone();
    for (idx, v) in out.data_mut().iter_mut().enumerate() {
        if spec.gaussian_sigma > 0.0 {
            *v += spec.gaussian_sigma * rng.next_normal();
        }
        let frac = fractions[idx / plane];
        if frac > 0.0 && rng.next_f64() < frac {
            *v = if rng.next_f64() < 0.5 { 0.0 } else { 1.0 };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::tubal_rank;

    #[test]
    fn rank_zero_is_zero_tensor() {
        let t = gen_lowrank(&[4, 5, 3], 0, 1).unwrap();
        assert_eq!(t.max_abs(), 0.0);
        assert!(gen_lowrank(&[4, 5, 3], 5, 1).is_err());
    }

    #[test]
    fn lowrank_has_bounded_tubal_rank() {
        let t = gen_lowrank(&[30, 30, 10], 3, 11).unwrap();
        assert!(tubal_rank(&t).unwrap() <= 3);
        assert_eq!(t, gen_lowrank(&[30, 30, 10], 3, 11).unwrap());
    }

    #[test]
    fn mask_counts() {
        let m = gen_mask(&[4, 5, 6], 1.0, 3).unwrap();
        assert!(m.observed().iter().all(|&b| b));
        let m = gen_mask(&[10, 10, 10], 0.3, 3).unwrap();
        assert_eq!(m.count(), 300);
        assert_eq!(m, gen_mask(&[10, 10, 10], 0.3, 3).unwrap());
        assert!(gen_mask(&[2, 2], 0.0, 1).is_err());
        assert!(gen_mask(&[2, 2], 1.5, 1).is_err());
    }

    #[test]
    fn mask_count_for_large_shape() {
        let m = gen_mask(&[256, 256, 31], 0.05, 9).unwrap();
        assert_eq!(m.count(), 101_581);
    }

    #[test]
    fn noise_free_spec_is_identity() {
        let z = rescale_unit(&gen_lowrank(&[5, 5, 4], 2, 1).unwrap());
        let spec = NoiseSpec {
            sp_fraction: 0.0,
            gaussian_sigma: 0.0,
            noniid: None,
            seed: 5,
        };
        assert_eq!(add_mixed_noise(&z, &spec).unwrap(), z);
    }

    #[test]
    fn salt_and_pepper_fraction() {
        let z = DenseTensor::from_vec(&[40, 50, 10], vec![0.5; 20_000]).unwrap();
        let spec = NoiseSpec {
            sp_fraction: 0.5,
            gaussian_sigma: 0.0,
            noniid: None,
            seed: 17,
        };
        let noisy = add_mixed_noise(&z, &spec).unwrap();
        let hits = noisy
            .data()
            .iter()
            .filter(|&&v| v == 0.0 || v == 1.0)
            .count() as f64;
        let n = 20_000.0;
        let sd = (n * 0.25f64).sqrt();
        assert!((hits - n * 0.5).abs() <= 4.0 * sd, "hits = {hits}");
    }

    #[test]
    fn noise_spec_validation() {
        let mut spec = NoiseSpec {
            sp_fraction: 1.2,
            gaussian_sigma: 0.0,
            noniid: None,
            seed: 0,
        };
        assert!(spec.validate().is_err());
        spec.sp_fraction = 0.05;
        spec.gaussian_sigma = 0.2;
        assert!(spec.validate().is_ok());
        spec.noniid = Some((0.15, 0.1));
        assert!(spec.validate().is_err());
    }

    #[test]
    fn noniid_fractions_stay_in_range() {
        let z = DenseTensor::from_vec(&[30, 30, 8], vec![0.5; 7200]).unwrap();
        let spec = NoiseSpec {
            sp_fraction: 0.0,
            gaussian_sigma: 0.0,
            noniid: Some((0.1, 0.15)),
            seed: 2,
        };
        let noisy = add_mixed_noise(&z, &spec).unwrap();
        for k in 0..8 {
            let hits = noisy.data()[k * 900..(k + 1) * 900]
                .iter()
                .filter(|&&v| v != 0.5)
                .count() as f64
                / 900.0;
            assert!(hits > 0.05 && hits < 0.22, "slice {k}: {hits}");
        }
    }
}
