//! The minimax logarithmic concave penalty (MLCP), its variational
//! (weight-minimization) form, and the proximal operators built on it.
//!
//! For `λ, γ, ε > 0` the scalar penalty is
//!
//! ```text
//! f(z) = λ·ln(|z|/ε + 1) − ln²(|z|/ε + 1) / (2γ)   if |z| ≤ ε(e^{γλ} − 1)
//!      = γλ²/2                                     otherwise
//! ```
//!
//! and equals `min_{ω ≥ 0} ω·ln(|z|/ε + 1) + (γ/2)(ω − λ)²`, attained at
//! `ω* = max(λ − ln(|z|/ε + 1)/γ, 0)`. The tensor version applies the same
//! construction to the Fourier-domain singular values of a 3-way tensor with
//! one weight per (singular value, slice) pair.
//!
//! Unlike `l1` or the nuclear norm, none of these penalties satisfies the
//! triangle inequality.

use nalgebra::DMatrix;

use crate::algebra::{fourier_singular_values, map_fourier_spectrum};
use crate::error::{invalid, Result};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub lambda: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl PenaltyParams {
    pub fn new(lambda: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            lambda,
            gamma,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma_eps(self.gamma, self.epsilon)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return invalid(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            ));
        }
        Ok(())
    }
}

fn check_gamma_eps(gamma: f64, epsilon: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return invalid(format!("gamma must be finite and > 0, got {gamma}"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return invalid(format!("epsilon must be finite and > 0, got {epsilon}"));
    }
    Ok(())
}

/// Per-unfolding weights `W` and their targets `Λ̄`, both `R x I3`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    pub w: DMatrix<f64>,
    pub lambda_bar: DMatrix<f64>,
}

impl WeightState {
    pub fn ones(rank: usize, tubes: usize) -> Self {
        Self {
            w: DMatrix::from_element(rank, tubes, 1.0),
            lambda_bar: DMatrix::from_element(rank, tubes, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.shape() != self.lambda_bar.shape() {
            return invalid("weight state: W and Lambda-bar shapes differ");
        }
        if self
            .w
            .iter()
            .chain(self.lambda_bar.iter())
            .any(|&v| !(v >= 0.0))
        {
            return invalid("weight state entries must be non-negative");
        }
        Ok(())
    }
}

#[inline]
fn log_term(z: f64, epsilon: f64) -> f64 {
    (z.abs() / epsilon).ln_1p()
}

/// Scalar MLCP value.
pub fn mlcp_scalar(z: f64, p: &PenaltyParams) -> f64 {
    mlcp_raw(z, p.lambda, p.gamma, p.epsilon)
}

#[inline]
fn mlcp_raw(z: f64, lambda: f64, gamma: f64, epsilon: f64) -> f64 {
    let l = log_term(z, epsilon);
    // |z| <= ε(e^{γλ} − 1)  <=>  ln(|z|/ε + 1) <= γλ
    if l <= gamma * lambda {
        lambda * l - l * l / (2.0 * gamma)
    } else {
        gamma * lambda * lambda / 2.0
    }
}

/// Sum of scalar MLCP values with a per-entry `λ`.
pub fn mlcp_tensor(z: &DenseTensor, lambda: &DenseTensor, gamma: f64, epsilon: f64) -> Result<f64> {
    z.require_same_shape(lambda, "mlcp_tensor")?;
    check_gamma_eps(gamma, epsilon)?;
    if lambda.data().iter().any(|&l| !(l >= 0.0)) {
        return invalid("mlcp_tensor: lambda must be non-negative");
    }
    Ok(z.data()
        .iter()
        .zip(lambda.data())
        .map(|(&v, &l)| mlcp_raw(v, l, gamma, epsilon))
        .sum())
}

/// `ω·ln(|z|/ε+1) + (γ/2)(ω−λ)²`, the objective whose minimum over `ω ≥ 0` is the MLCP.
pub fn emlcp_objective(z: f64, omega: f64, p: &PenaltyParams) -> f64 {
    omega * log_term(z, p.epsilon) + 0.5 * p.gamma * (omega - p.lambda).powi(2)
}

/// Closed-form minimizer `ω* = max(λ − ln(|z|/ε+1)/γ, 0)`.
pub fn emlcp_weight_minimizer(z: f64, p: &PenaltyParams) -> f64 {
    (p.lambda - log_term(z, p.epsilon) / p.gamma).max(0.0)
}

fn check_weights(what: &str, w: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<()> {
    if w.shape() != sigma.shape() {
        return invalid(format!(
            "{what}: weights are {:?} but the tensor has {:?} singular values",
            w.shape(),
            sigma.shape()
        ));
    }
    Ok(())
}

/// `Σ_i Σ_j W_{j,i} ln(σ_j / ε + 1)` over a singular-value table.
pub fn log_weighted_norm_from_sigma(sigma: &DMatrix<f64>, w: &DMatrix<f64>, epsilon: f64) -> f64 {
    sigma
        .iter()
        .zip(w.iter())
        .map(|(&s, &wt)| wt * log_term(s, epsilon))
        .sum()
}

/// Weighted logarithmic norm of the Fourier-domain singular values.
pub fn log_weighted_norm(z: &DenseTensor, w: &DMatrix<f64>, epsilon: f64) -> Result<f64> {
    let sigma = fourier_singular_values(z)?;
    check_weights("log_weighted_norm", w, &sigma)?;
    Ok(log_weighted_norm_from_sigma(&sigma, w, epsilon))
}

/// Equivalent weighted tensor Lγ-norm from a singular-value table.
pub fn ewt_lgamma_norm_from_sigma(
    sigma: &DMatrix<f64>,
    lambda_bar: &DMatrix<f64>,
    gamma: f64,
    epsilon: f64,
) -> f64 {
    sigma
        .iter()
        .zip(lambda_bar.iter())
        .map(|(&s, &l)| {
            let w = (l - log_term(s, epsilon) / gamma).max(0.0);
            w * log_term(s, epsilon) + 0.5 * gamma * (w - l).powi(2)
        })
        .sum()
}

/// Equivalent weighted tensor Lγ-norm: the minimum over `W ≥ 0` of
/// `‖Z‖_{L,W} + (γ/2)‖W − Λ̄‖²_F`, evaluated with the closed-form `W`.
pub fn ewt_lgamma_norm(
    z: &DenseTensor,
    lambda_bar: &DMatrix<f64>,
    gamma: f64,
    epsilon: f64,
) -> Result<f64> {
    check_gamma_eps(gamma, epsilon)?;
    let sigma = fourier_singular_values(z)?;
    check_weights("ewt_lgamma_norm", lambda_bar, &sigma)?;
    Ok(ewt_lgamma_norm_from_sigma(
        &sigma, lambda_bar, gamma, epsilon,
    ))
}

/// How a singular value is shrunk under the weighted log penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShrinkRule {
    /// Zero at or below `2√α − ε`, otherwise the larger stationary root.
    #[default]
    Threshold,
    /// Compare the objective at zero and at the root and keep the smaller.
    Strict,
}

/// `(ρ/2)(s − y)² + w·ln(s/ε + 1)`, the scalar shrinkage objective.
pub fn shrink_objective(s: f64, y: f64, w: f64, rho: f64, epsilon: f64) -> f64 {
    0.5 * rho * (s - y).powi(2) + w * log_term(s, epsilon)
}

#[inline]
fn shrink_raw(y: f64, w: f64, rho: f64, epsilon: f64, rule: ShrinkRule) -> f64 {
    let alpha = w / rho;
    if y <= 2.0 * alpha.sqrt() - epsilon {
        return 0.0;
    }
    let l1 = y - epsilon;
    let l2 = ((y + epsilon).powi(2) - 4.0 * alpha).max(0.0).sqrt();
    // both roots negative when y·ε < α and y < ε; the minimizer on s ≥ 0 is then 0
    let root = (0.5 * (l1 + l2)).max(0.0);
    match rule {
        ShrinkRule::Threshold => root,
        ShrinkRule::Strict => {
            if shrink_objective(root, y, w, rho, epsilon)
                < shrink_objective(0.0, y, w, rho, epsilon)
            {
                root
            } else {
                0.0
            }
        }
    }
}

fn check_shrink_args(y: f64, w: f64, rho: f64, epsilon: f64) -> Result<()> {
    if !(y >= 0.0) || !(w >= 0.0) {
        return invalid(format!(
            "shrink: y and w must be non-negative, got y={y}, w={w}"
        ));
    }
    if !(rho > 0.0) || !(epsilon > 0.0) {
        return invalid(format!(
            "shrink: rho and epsilon must be positive, got rho={rho}, epsilon={epsilon}"
        ));
    }
    Ok(())
}

/// Minimizer over `s ≥ 0` of `(ρ/2)(s − y)² + w·ln(s/ε + 1)` by the threshold rule.
pub fn shrink_singular_value(y: f64, w: f64, rho: f64, epsilon: f64) -> Result<f64> {
    shrink_singular_value_with(y, w, rho, epsilon, ShrinkRule::Threshold)
}

pub fn shrink_singular_value_with(
    y: f64,
    w: f64,
    rho: f64,
    epsilon: f64,
    rule: ShrinkRule,
) -> Result<f64> {
    check_shrink_args(y, w, rho, epsilon)?;
    Ok(shrink_raw(y, w, rho, epsilon, rule))
}

/// Output of a spectral proximal step.
#[derive(Debug, Clone)]
pub struct SpectralProx {
    pub tensor: DenseTensor,
    /// Fourier singular values of the input.
    pub sigma_in: DMatrix<f64>,
    /// Fourier singular values of the output.
    pub sigma_out: DMatrix<f64>,
}

/// Proximal map of `‖·‖_{L,W}` with fixed weights:
/// `argmin_L (ρ/2)‖L − Y‖²_F + Σ_i Σ_j W_{j,i} ln(σ_j(L̄^{(i)})/ε + 1)`.
///
/// The Fourier slices carry `I3` times the spatial energy, so each slice is
/// shrunk with parameter `ρ/I3`.
pub fn prox_weighted_log(
    y: &DenseTensor,
    w: &DMatrix<f64>,
    rho: f64,
    epsilon: f64,
    rule: ShrinkRule,
) -> Result<SpectralProx> {
    let (n1, n2, n3) = y.require_3way("prox_weighted_log")?;
    if !y.is_finite() {
        return invalid("prox_weighted_log: input has non-finite entries");
    }
    if w.shape() != (n1.min(n2), n3) {
        return invalid(format!(
            "prox_weighted_log: weights are {:?}, expected {:?}",
            w.shape(),
            (n1.min(n2), n3)
        ));
    }
    check_shrink_args(0.0, 0.0, rho, epsilon)?;
    if w.iter().any(|&v| !(v >= 0.0)) {
        return invalid("prox_weighted_log: weights must be non-negative");
    }
    let slice_rho = rho / n3 as f64;
    let (tensor, sigma_in, sigma_out) = map_fourier_spectrum(y, |k, s| {
        s.iter()
            .enumerate()
            .map(|(j, &sv)| shrink_raw(sv, w[(j, k)], slice_rho, epsilon, rule))
            .collect()
    })?;
    Ok(SpectralProx {
        tensor,
        sigma_in,
        sigma_out,
    })
}

/// Joint minimization over one singular value and its weight of
/// `(ρ/2)(s−y)² + w·ln(s/ε+1) + (γ/2)(w−λ)²`, by alternating the exact
/// weight update with the shrinkage step from the starting weight `w0`.
fn alternate_value_weight(
    y: f64,
    lambda: f64,
    w0: f64,
    gamma: f64,
    rho: f64,
    epsilon: f64,
    rule: ShrinkRule,
) -> (f64, f64) {
    let mut s = shrink_raw(y, w0, rho, epsilon, rule);
    for _ in 0..500 {
        let w_next = (lambda - log_term(s, epsilon) / gamma).max(0.0);
        let s_next = shrink_raw(y, w_next, rho, epsilon, rule);
        let done = (s_next - s).abs() <= 1e-15 * (1.0 + s.abs());
        s = s_next;
        if done {
            break;
        }
    }
    (s, (lambda - log_term(s, epsilon) / gamma).max(0.0))
}

fn joint_objective(s: f64, w: f64, y: f64, lambda: f64, gamma: f64, rho: f64, epsilon: f64) -> f64 {
    shrink_objective(s, y, w, rho, epsilon) + 0.5 * gamma * (w - lambda).powi(2)
}

/// Per-value proximal step of the equivalent penalty: returns `(s, w)`.
pub fn prox_ewt_scalar(
    y: f64,
    lambda: f64,
    gamma: f64,
    rho: f64,
    epsilon: f64,
    rule: ShrinkRule,
) -> (f64, f64) {
    let from_target = alternate_value_weight(y, lambda, lambda, gamma, rho, epsilon, rule);
    if rule == ShrinkRule::Threshold {
        return from_target;
    }
    // a second start from the unshrunk value guards against the lower fixed point
    let w_at_y = (lambda - log_term(y, epsilon) / gamma).max(0.0);
    let from_input = alternate_value_weight(y, lambda, w_at_y, gamma, rho, epsilon, rule);
    let f = |(s, w): (f64, f64)| joint_objective(s, w, y, lambda, gamma, rho, epsilon);
    let mut best = from_target;
    for cand in [from_input, (0.0, lambda)] {
        if f(cand) < f(best) {
            best = cand;
        }
    }
    best
}

/// Proximal operator of the equivalent weighted tensor Lγ-norm:
/// `argmin_L (ρ/2)‖L − Y‖²_F + ‖L‖_{L,γ,Λ̄}`, together with the weights
/// `W_{j,i} = max(Λ̄_{j,i} − ln(σ_j(L̄^{(i)})/ε + 1)/γ, 0)` at the result.
pub fn prox_ewt_lgamma(
    y: &DenseTensor,
    lambda_bar: &DMatrix<f64>,
    gamma: f64,
    rho: f64,
    epsilon: f64,
    rule: ShrinkRule,
) -> Result<(DenseTensor, DMatrix<f64>)> {
    let (n1, n2, n3) = y.require_3way("prox_ewt_lgamma")?;
    if !y.is_finite() {
        return invalid("prox_ewt_lgamma: input has non-finite entries");
    }
    check_gamma_eps(gamma, epsilon)?;
    if !(rho > 0.0) {
        return invalid(format!("prox_ewt_lgamma: rho must be positive, got {rho}"));
    }
    if lambda_bar.shape() != (n1.min(n2), n3) {
        return invalid(format!(
            "prox_ewt_lgamma: Lambda-bar is {:?}, expected {:?}",
            lambda_bar.shape(),
            (n1.min(n2), n3)
        ));
    }
    if lambda_bar.iter().any(|&v| !(v >= 0.0)) {
        return invalid("prox_ewt_lgamma: Lambda-bar must be non-negative");
    }
    let slice_rho = rho / n3 as f64;
    let (tensor, _, sigma_out) = map_fourier_spectrum(y, |k, s| {
        s.iter()
            .enumerate()
            .map(|(j, &sv)| {
                prox_ewt_scalar(sv, lambda_bar[(j, k)], gamma, slice_rho, epsilon, rule).0
            })
            .collect()
    })?;
    let w = DMatrix::from_fn(sigma_out.nrows(), sigma_out.ncols(), |j, i| {
        (lambda_bar[(j, i)] - log_term(sigma_out[(j, i)], epsilon) / gamma).max(0.0)
    });
    Ok((tensor, w))
}

/// Proximal weight update:
/// `W⁺ = max((γΛ̄ + ρW − ln(σ/ε + 1)) / (γ + ρ), 0)` entrywise.
pub fn update_weights(
    sigma: &DMatrix<f64>,
    state: &WeightState,
    gamma: f64,
    rho: f64,
    epsilon: f64,
) -> DMatrix<f64> {
    DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |j, i| {
        let num = gamma * state.lambda_bar[(j, i)] + rho * state.w[(j, i)]
            - log_term(sigma[(j, i)], epsilon);
        (num / (gamma + rho)).max(0.0)
    })
}

/// Proximal target update: `Λ̄⁺ = (γW⁺ + ρΛ̄) / (γ + ρ)`.
pub fn update_lambda_bar(
    w_new: &DMatrix<f64>,
    lambda_bar: &DMatrix<f64>,
    gamma: f64,
    rho: f64,
) -> DMatrix<f64> {
    (w_new * gamma + lambda_bar * rho) / (gamma + rho)
}
