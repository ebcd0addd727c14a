//! Independent oracles shared by the integration suites. Nothing here calls
//! the Fourier-domain code paths of the library.
#![allow(dead_code)]

use mlcp_core::rng::SplitMix64;
use mlcp_core::{DMatrix, DenseTensor};
use num_complex::Complex64;

pub fn random_tensor(shape: &[usize], rng: &mut SplitMix64) -> DenseTensor {
    DenseTensor::from_fn(shape, |_| rng.next_normal()).unwrap()
}

pub fn random_extent(rng: &mut SplitMix64, max: usize) -> usize {
    1 + rng.next_below(max as u64) as usize
}

/// Block-circulant matrix of a 3-way tensor: block (r, c) is slice (r − c) mod I3.
pub fn bcirc(a: &DenseTensor) -> DMatrix<f64> {
    let (n1, n2, n3) = (a.shape()[0], a.shape()[1], a.shape()[2]);
    DMatrix::from_fn(n1 * n3, n2 * n3, |r, c| {
        let (br, i) = (r / n1, r % n1);
        let (bc, j) = (c / n2, c % n2);
        a.at3(i, j, (br + n3 - bc) % n3)
    })
}

/// Frontal slices stacked vertically.
pub fn unfold_vertical(b: &DenseTensor) -> DMatrix<f64> {
    let (n1, n2, n3) = (b.shape()[0], b.shape()[1], b.shape()[2]);
    DMatrix::from_fn(n1 * n3, n2, |r, j| b.at3(r % n1, j, r / n1))
}

pub fn fold_vertical(m: &DMatrix<f64>, n1: usize, n3: usize) -> DenseTensor {
    DenseTensor::from_fn(&[n1, m.ncols(), n3], |i| m[(i[0] + i[2] * n1, i[1])]).unwrap()
}

/// t-product through the block-circulant materialization.
pub fn t_product_bcirc(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let prod = bcirc(a) * unfold_vertical(b);
    fold_vertical(&prod, a.shape()[0], a.shape()[2])
}

/// Fourier slices by direct O(I3²) summation, `X̄_k = Σ_t X_t e^{−2πi kt/I3}`.
pub fn dft_direct(a: &DenseTensor) -> Vec<DMatrix<Complex64>> {
    let (n1, n2, n3) = (a.shape()[0], a.shape()[1], a.shape()[2]);
    (0..n3)
        .map(|k| {
            DMatrix::from_fn(n1, n2, |i, j| {
                (0..n3)
                    .map(|t| {
                        let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / n3 as f64;
                        Complex64::from_polar(a.at3(i, j, t), ang)
                    })
                    .sum()
            })
        })
        .collect()
}

/// Singular values of every Fourier slice, read off the block-circulant
/// matrix (whose spectrum is their union), sorted non-increasingly.
pub fn fourier_spectrum_bcirc(a: &DenseTensor) -> Vec<f64> {
    let mut s: Vec<f64> = bcirc(a).singular_values().iter().copied().collect();
    let keep = a.shape()[0].min(a.shape()[1]) * a.shape()[2];
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s.truncate(keep);
    s
}

/// Minimum of `f` over `lo, lo + step, …, hi`, returning `(argmin, min)`.
pub fn grid_min(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut best = (lo, f(lo));
    for i in 1..=n {
        let x = (lo + i as f64 * step).min(hi);
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Global grid minimization on `[0, hi]` to resolution `fine`: a coarse pass,
/// then a fine pass around every coarse local minimum (endpoints included).
pub fn grid_min_refined(hi: f64, coarse: f64, fine: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = (hi / coarse).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| (i as f64 * coarse).min(hi)).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..xs.len() {
        let left = i == 0 || vs[i] <= vs[i - 1];
        let right = i + 1 == xs.len() || vs[i] <= vs[i + 1];
        if left && right {
            let lo = (xs[i] - coarse).max(0.0);
            let up = (xs[i] + coarse).min(hi);
            let cand = grid_min(lo, up, fine, &f);
            if cand.1 < best.1 {
                best = cand;
            }
        }
    }
    best
}

/// Path of a shipped configuration file.
pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn load_config(name: &str) -> mlcp_core::SolverConfig {
    let text = std::fs::read_to_string(config_path(name)).unwrap();
    let mut cfg = mlcp_core::SolverConfig::default();
    cfg.apply_text(&text).unwrap();
    cfg
}

/// Trace CSV with the wall-clock column removed.
pub fn trace_without_seconds(rep: &mlcp_core::RecoveryReport) -> String {
    let mut buf = Vec::new();
    rep.write_trace_csv(&mut buf, false).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let drop = header.iter().position(|&h| h == "seconds").unwrap();
    text.lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Conjugate transpose: transpose every slice and reverse slices 1..I3.
pub fn conj_transpose_oracle(a: &DenseTensor) -> DenseTensor {
    let (n1, n2, n3) = (a.shape()[0], a.shape()[1], a.shape()[2]);
    DenseTensor::from_fn(&[n2, n1, n3], |i| a.at3(i[1], i[0], (n3 - i[2]) % n3)).unwrap()
}
