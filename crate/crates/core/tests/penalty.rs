mod common;

use common::*;
use mlcp_core::penalty::*;
use mlcp_core::rng::SplitMix64;
use mlcp_core::*;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = PenaltyParams> {
    (0.05f64..3.0, 0.1f64..100.0, 0.005f64..2.0)
        .prop_map(|(l, g, e)| PenaltyParams::new(l, g, e).unwrap())
}

proptest! {
    #[test]
    fn mlcp_is_bounded_symmetric_and_nonnegative(p in params(), z in -50.0f64..50.0) {
        let v = mlcp_scalar(z, &p);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= p.gamma * p.lambda * p.lambda / 2.0 + 1e-12);
        prop_assert_eq!(v, mlcp_scalar(-z, &p));
    }

    #[test]
    fn mlcp_is_nondecreasing_and_concave(p in params(), a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        let mid = 0.5 * (lo + hi);
        let f = |z| mlcp_scalar(z, &p);
        prop_assert!(f(lo) <= f(hi) + 1e-12);
        prop_assert!(f(mid) + 1e-12 >= 0.5 * (f(lo) + f(hi)));
    }

    #[test]
    fn mlcp_increases_with_gamma(p in params(), z in 0.0f64..20.0, k in 1.0f64..10.0) {
        let q = PenaltyParams::new(p.lambda, p.gamma * k, p.epsilon).unwrap();
        prop_assert!(mlcp_scalar(z, &p) <= mlcp_scalar(z, &q) + 1e-12);
    }

    #[test]
    fn weight_minimizer_beats_any_weight(p in params(), z in -20.0f64..20.0, om in 0.0f64..5.0) {
        let w = emlcp_weight_minimizer(z, &p);
        prop_assert!(emlcp_objective(z, w, &p) <= emlcp_objective(z, om, &p) + 1e-12);
        prop_assert!((emlcp_objective(z, w, &p) - mlcp_scalar(z, &p)).abs() <= 1e-10 * (1.0 + mlcp_scalar(z, &p)));
    }

    #[test]
    fn strict_shrink_beats_perturbations(y in 0.0f64..5.0, w in 0.001f64..3.0, rho in 0.1f64..10.0,
                                         eps in 0.01f64..1.0, d in -0.5f64..0.5) {
        let s = shrink_singular_value_with(y, w, rho, eps, ShrinkRule::Strict).unwrap();
        prop_assert!(s >= 0.0 && s <= y);
        let f = |v: f64| shrink_objective(v, y, w, rho, eps);
        prop_assert!(f(s) <= f((s + d).max(0.0)) + 1e-12);
    }
}

#[test]
fn shrink_examples() {
    // zero weight returns the input
    assert_eq!(shrink_singular_value(1.7, 0.0, 2.0, 0.1).unwrap(), 1.7);
    // below the threshold 2√α − ε
    assert_eq!(shrink_singular_value(0.5, 1.0, 1.0, 0.1).unwrap(), 0.0);
    // above it, the larger stationary root
    let (y, w, rho, eps) = (3.0f64, 1.0, 1.0, 0.1);
    let s = shrink_singular_value(y, w, rho, eps).unwrap();
    let expect = 0.5 * ((y - eps) + ((y + eps).powi(2) - 4.0 * w / rho).sqrt());
    assert!((s - expect).abs() < 1e-14);
    assert!(shrink_singular_value(-1.0, 1.0, 1.0, 0.1).is_err());
    assert!(shrink_singular_value(1.0, 1.0, 0.0, 0.1).is_err());
}

/// Per-slice singular values of the prox output are the scalar shrinkage of
/// the input's, with slice parameter ρ/I3; read through the block-circulant
/// spectrum so no library SVD is involved.
#[test]
fn prox_weighted_log_is_slicewise_shrinkage() {
    let mut rng = SplitMix64::new(11);
    for shape in [[6, 5, 4], [4, 7, 3], [5, 5, 1]] {
        let y = random_tensor(&shape, &mut rng).scale(3.0);
        let (r, n3) = (shape[0].min(shape[1]), shape[2]);
        let (w, rho, eps) = (0.7, 0.9, 0.05);
        let wm = DMatrix::from_element(r, n3, w);
        let out = prox_weighted_log(&y, &wm, rho, eps, ShrinkRule::Threshold).unwrap();
        let mut expect: Vec<f64> = fourier_spectrum_bcirc(&y)
            .iter()
            .map(|&s| shrink_singular_value(s, w, rho / n3 as f64, eps).unwrap())
            .collect();
        expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let got = fourier_spectrum_bcirc(&out.tensor);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-9 * (1.0 + e), "{shape:?}: {g} vs {e}");
        }
    }
}

#[test]
fn prox_with_zero_weights_is_identity() {
    let mut rng = SplitMix64::new(12);
    let y = random_tensor(&[5, 4, 3], &mut rng);
    let out =
        prox_weighted_log(&y, &DMatrix::zeros(4, 3), 1.0, 0.1, ShrinkRule::Threshold).unwrap();
    assert!(out.tensor.max_abs_diff(&y) < 1e-12);
}

/// The strict prox minimizes the spatial objective: random perturbations never do better.
#[test]
fn strict_prox_beats_perturbations() {
    let mut rng = SplitMix64::new(13);
    let y = random_tensor(&[5, 4, 4], &mut rng).scale(2.0);
    let w = DMatrix::from_fn(4, 4, |_, _| rng.next_range(0.1, 1.5));
    let (rho, eps) = (1.3, 0.05);
    let obj = |l: &DenseTensor| {
        0.5 * rho * l.frobenius_diff(&y).powi(2) + log_weighted_norm(l, &w, eps).unwrap()
    };
    let best = prox_weighted_log(&y, &w, rho, eps, ShrinkRule::Strict)
        .unwrap()
        .tensor;
    let f0 = obj(&best);
    for _ in 0..200 {
        let step = rng.next_range(1e-4, 0.5);
        let cand = best.add(&random_tensor(&[5, 4, 4], &mut rng).scale(step));
        assert!(f0 <= obj(&cand) + 1e-9, "{f0} > {}", obj(&cand));
    }
}

/// Joint minimization over (s, w) agrees with a 2-D grid in the strict mode.
#[test]
fn prox_ewt_scalar_matches_joint_grid() {
    let mut rng = SplitMix64::new(14);
    for _ in 0..60 {
        let (y, lambda) = (rng.next_range(0.0, 4.0), rng.next_range(0.1, 2.0));
        let (gamma, rho, eps) = (
            rng.next_range(0.5, 20.0),
            rng.next_range(0.3, 5.0),
            rng.next_range(0.02, 0.5),
        );
        let (s, w) = prox_ewt_scalar(y, lambda, gamma, rho, eps, ShrinkRule::Strict);
        let joint = |s: f64, w: f64| {
            0.5 * rho * (s - y).powi(2) + w * (s / eps).ln_1p() + 0.5 * gamma * (w - lambda).powi(2)
        };
        // for fixed s the optimal w is closed form, leaving a 1-D grid in s
        let profile = |s: f64| {
            let l = (s / eps).ln_1p();
            joint(s, (lambda - l / gamma).max(0.0))
        };
        let (_, gv) = grid_min_refined(y.max(1e-3), 1e-3, 1e-6, profile);
        assert!(joint(s, w) <= gv + 1e-7, "y={y}: {} > {gv}", joint(s, w));
    }
}

/// `prox_ewt_lgamma`'s output is a fixed point of the fixed-weight prox at its own weights.
#[test]
fn prox_ewt_lgamma_is_consistent_with_weighted_prox() {
    let mut rng = SplitMix64::new(15);
    let y = random_tensor(&[6, 5, 3], &mut rng).scale(2.0);
    let lam = DMatrix::from_element(5, 3, 0.8);
    let (gamma, rho, eps) = (5.0, 1.1, 0.05);
    let (l, w) = prox_ewt_lgamma(&y, &lam, gamma, rho, eps, ShrinkRule::Threshold).unwrap();
    let again = prox_weighted_log(&y, &w, rho, eps, ShrinkRule::Threshold)
        .unwrap()
        .tensor;
    assert!(again.max_abs_diff(&l) < 1e-9);
    assert!(w.iter().all(|&v| (0.0..=0.8).contains(&v)));
}

#[test]
fn weight_and_target_updates() {
    let sigma = DMatrix::from_row_slice(2, 1, &[3.0, 0.0]);
    let state = WeightState {
        w: DMatrix::from_element(2, 1, 0.5),
        lambda_bar: DMatrix::from_element(2, 1, 1.0),
    };
    let (gamma, rho, eps) = (4.0, 2.0, 1.0);
    let w = update_weights(&sigma, &state, gamma, rho, eps);
    // exact minimizer of w·ln(σ/ε+1) + γ/2(w−Λ̄)² + ρ/2(w−W)² on w ≥ 0
    for j in 0..2 {
        let l = (sigma[(j, 0)] / eps).ln_1p();
        let f = |x: f64| x * l + 0.5 * gamma * (x - 1.0).powi(2) + 0.5 * rho * (x - 0.5).powi(2);
        let (gx, _) = grid_min(0.0, 2.0, 1e-6, f);
        assert!((w[(j, 0)] - gx).abs() < 1e-5);
    }
    let lb = update_lambda_bar(
        &DMatrix::from_element(1, 1, 0.9),
        &DMatrix::from_element(1, 1, 0.3),
        2.0,
        1.0,
    );
    assert!((lb[(0, 0)] - 0.7).abs() < 1e-15);
    let same = update_lambda_bar(&state.lambda_bar, &state.lambda_bar, 3.0, 7.0);
    assert_eq!(same, state.lambda_bar);
}

#[test]
fn ewt_norm_matches_mlcp_of_the_spectrum() {
    let mut rng = SplitMix64::new(16);
    let z = random_tensor(&[4, 6, 5], &mut rng);
    let lam = DMatrix::from_element(4, 5, 1.2);
    let (gamma, eps) = (3.0, 0.1);
    let p = PenaltyParams::new(1.2, gamma, eps).unwrap();
    let expect: f64 = fourier_spectrum_bcirc(&z)
        .iter()
        .map(|&s| mlcp_scalar(s, &p))
        .sum();
    let got = ewt_lgamma_norm(&z, &lam, gamma, eps).unwrap();
    assert!((got - expect).abs() < 1e-9 * expect);
}
