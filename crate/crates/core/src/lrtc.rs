//! Low-rank tensor completion by proximal alternating linearized
//! minimization over every mode-pair unfolding.
//!
//! Each active pair `(k1, k2)` keeps an auxiliary copy `M` of the unfolded
//! iterate, a multiplier `Q` and a weight state `(W, Λ̄)`. One sweep runs
//! `W → M → Λ̄` for every pair, then `Z`, then the multipliers, and finally
//! scales μ and ρ by the growth factor.
//!
//! The monitored augmented Lagrangian is
//!
//! ```text
//! Σ β (‖M‖_{L,W} + γ/2 ‖W − Λ̄‖²) + Σ μ/2 ‖Z_(k1k2) − M + Q/μ‖²
//! ```
//!
//! with `Z` kept feasible on the observed set.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::algebra::fourier_singular_values;
use crate::config::SolverConfig;
use crate::data::SamplingMask;
use crate::error::{invalid, Result};
use crate::penalty::{
    log_weighted_norm_from_sigma, prox_weighted_log, update_lambda_bar, update_weights, ShrinkRule,
    SpectralProx, WeightState,
};
use crate::report::{RecoveryReport, TraceRow};
use crate::tensor::{fold_mode_pair, mode_pairs, unfold_mode_pair, DenseTensor};

/// Auxiliary state of one mode pair.
#[derive(Debug, Clone)]
pub struct PairState {
    /// 0-based modes.
    pub modes: (usize, usize),
    pub beta: f64,
    pub mu: f64,
    /// Auxiliary low-rank copy, in unfolded (3-way) form.
    pub aux: DenseTensor,
    /// Multiplier, unfolded.
    pub multiplier: DenseTensor,
    pub weights: WeightState,
    /// Fourier singular values of `aux`.
    pub sigma: DMatrix<f64>,
}

impl PairState {
    pub(crate) fn new(
        modes: (usize, usize),
        beta: f64,
        mu: f64,
        unfolded: DenseTensor,
    ) -> Result<Self> {
        let sigma = fourier_singular_values(&unfolded)?;
        let weights = WeightState::ones(sigma.nrows(), sigma.ncols());
        Ok(Self {
            modes,
            beta,
            mu,
            multiplier: DenseTensor::zeros(unfolded.shape())?,
            aux: unfolded,
            weights,
            sigma,
        })
    }

    /// `β (‖aux‖_{L,W} + γ/2 ‖W − Λ̄‖²)`.
    pub fn penalty(&self, gamma: f64, epsilon: f64) -> f64 {
        let tether = (&self.weights.w - &self.weights.lambda_bar).norm_squared();
        self.beta
            * (log_weighted_norm_from_sigma(&self.sigma, &self.weights.w, epsilon)
                + 0.5 * gamma * tether)
    }

    /// `μ/2 ‖X − aux + multiplier/μ‖²` for the unfolded primal iterate `x`.
    pub fn coupling(&self, x_unfolded: &DenseTensor) -> f64 {
        let inv = 1.0 / self.mu;
        let s: f64 = x_unfolded
            .data()
            .iter()
            .zip(self.aux.data())
            .zip(self.multiplier.data())
            .map(|((&x, &m), &q)| {
                let r = x - m + q * inv;
                r * r
            })
            .sum();
        0.5 * self.mu * s
    }

    /// Linearized proximal argument `aux + (μX + Q − μ·aux)/ρ1`.
    pub fn prox_argument(&self, x_unfolded: &DenseTensor, rho1: f64) -> DenseTensor {
        let mu = self.mu;
        let mut y = self.aux.clone();
        for ((y, &x), &q) in y
            .data_mut()
            .iter_mut()
            .zip(x_unfolded.data())
            .zip(self.multiplier.data())
        {
            *y += (mu * x + q - mu * *y) / rho1;
        }
        y
    }

    /// Weight step from the singular values of the current `aux`.
    pub fn weights_step(&self, gamma: f64, rho: f64, epsilon: f64) -> DMatrix<f64> {
        update_weights(&self.sigma, &self.weights, gamma, rho, epsilon)
    }

    /// Low-rank step with weights `w_new`: spectral prox of `β·‖·‖_{L,W⁺}` at ρ1.
    pub fn aux_step(
        &self,
        x_unfolded: &DenseTensor,
        w_new: &DMatrix<f64>,
        rho1: f64,
        epsilon: f64,
        rule: ShrinkRule,
    ) -> Result<SpectralProx> {
        let y = self.prox_argument(x_unfolded, rho1);
        prox_weighted_log(&y, &(w_new * self.beta), rho1, epsilon, rule)
    }

    /// Run `W → aux → Λ̄` and return the new pair state plus strict overrides.
    pub(crate) fn low_rank_sweep(
        &self,
        x_unfolded: &DenseTensor,
        cfg: &SolverConfig,
        rho: f64,
    ) -> Result<(PairState, usize)> {
        let rho1 = cfg.gamma1 * self.mu;
        let w_new = self.weights_step(cfg.gamma, rho, cfg.epsilon);
        let prox = self.aux_step(x_unfolded, &w_new, rho1, cfg.epsilon, cfg.shrink_rule)?;
        let overrides = count_overrides(
            &prox,
            &(&w_new * self.beta),
            rho1,
            cfg.epsilon,
            cfg.shrink_rule,
        );
        let lambda_bar = update_lambda_bar(&w_new, &self.weights.lambda_bar, cfg.gamma, rho);
        Ok((
            PairState {
                modes: self.modes,
                beta: self.beta,
                mu: self.mu,
                aux: prox.tensor,
                multiplier: self.multiplier.clone(),
                weights: WeightState {
                    w: w_new,
                    lambda_bar,
                },
                sigma: prox.sigma_out,
            },
            overrides,
        ))
    }

    /// Multiplier step `Q + μ(X − aux)`.
    pub fn multiplier_step(&self, x_unfolded: &DenseTensor) -> DenseTensor {
        let mut q = self.multiplier.clone();
        for ((q, &x), &m) in q
            .data_mut()
            .iter_mut()
            .zip(x_unfolded.data())
            .zip(self.aux.data())
        {
            *q += self.mu * (x - m);
        }
        q
    }
}

fn count_overrides(
    prox: &SpectralProx,
    w: &DMatrix<f64>,
    rho1: f64,
    epsilon: f64,
    rule: ShrinkRule,
) -> usize {
    if rule != ShrinkRule::Strict {
        return 0;
    }
    let slice_rho = rho1 / prox.sigma_in.ncols() as f64;
    prox.sigma_in
        .iter()
        .zip(prox.sigma_out.iter())
        .zip(w.iter())
        .filter(|((&y, &s), &wt)| {
            s == 0.0
                && crate::penalty::shrink_singular_value(y, wt, slice_rho, epsilon).unwrap_or(0.0)
                    > 0.0
        })
        .count()
}

/// Build the active pairs (β > 0) for a tensor of shape `x`.
pub(crate) fn init_pairs(x: &DenseTensor, beta: &[f64], mu0: f64) -> Result<Vec<PairState>> {
    mode_pairs(x.ndim())
        .into_iter()
        .zip(beta)
        .filter(|(_, &b)| b > 0.0)
        .map(|((k1, k2), &b)| PairState::new((k1, k2), b, mu0, unfold_mode_pair(x, k1, k2)?))
        .collect()
}

/// Full iterate of the completion solver.
#[derive(Debug, Clone)]
pub struct LrtcState {
    pub z: DenseTensor,
    pub pairs: Vec<PairState>,
    pub rho: f64,
    pub iter: usize,
    observed: DenseTensor,
    mask: SamplingMask,
}

/// Summary of one sweep.
#[derive(Debug, Clone)]
pub struct SweepStats {
    pub inf_norm_diff: f64,
    pub lagrangian_start: f64,
    pub lagrangian: f64,
    pub pair_objectives: Vec<f64>,
    pub strict_overrides: usize,
}

impl LrtcState {
    /// `Z⁰ = P_Ω(T)`, `M⁰ = Z⁰`, `Q⁰ = 0`, `W⁰ = Λ̄⁰ = 1`.
    pub fn new(t: &DenseTensor, mask: &SamplingMask, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if t.shape() != mask.shape() {
            return invalid(format!(
                "mask shape {:?} does not match tensor shape {:?}",
                mask.shape(),
                t.shape()
            ));
        }
        let observed = mask.project(t);
        if !observed.is_finite() {
            return invalid("observed entries must be finite");
        }
        let beta = cfg.resolve_beta(t.ndim())?;
        let z = observed.clone();
        let pairs = init_pairs(&z, &beta, cfg.mu0)?;
        if pairs.is_empty() {
            return invalid("beta disables every mode pair");
        }
        Ok(Self {
            z,
            pairs,
            rho: cfg.rho0,
            iter: 0,
            observed,
            mask: mask.clone(),
        })
    }

    fn unfold_z(&self) -> Result<Vec<DenseTensor>> {
        self.pairs
            .iter()
            .map(|p| unfold_mode_pair(&self.z, p.modes.0, p.modes.1))
            .collect()
    }

    /// Augmented Lagrangian at the current iterate.
    pub fn lagrangian(&self, cfg: &SolverConfig) -> Result<f64> {
        let zu = self.unfold_z()?;
        Ok(self
            .pairs
            .iter()
            .zip(&zu)
            .map(|(p, z)| p.penalty(cfg.gamma, cfg.epsilon) + p.coupling(z))
            .sum())
    }

    /// Data step: observed entries from `T`, the rest the weighted average
    /// `(Σ μ fold(M) − fold(Q) + ρZ) / (Σ μ + ρ)` using the current pairs.
    pub fn z_step(&self) -> Result<DenseTensor> {
        let shape = self.z.shape().to_vec();
        let mut num = self.z.scale(self.rho);
        let mut den = self.rho;
        for p in &self.pairs {
            let (k1, k2) = p.modes;
            let m = fold_mode_pair(&p.aux, k1, k2, &shape)?;
            let q = fold_mode_pair(&p.multiplier, k1, k2, &shape)?;
            num.axpy(p.mu, &m);
            num.axpy(-1.0, &q);
            den += p.mu;
        }
        let inv = 1.0 / den;
        let mut z = num;
        for ((v, &o), &t) in z
            .data_mut()
            .iter_mut()
            .zip(self.mask.observed())
            .zip(self.observed.data())
        {
            *v = if o { t } else { *v * inv };
        }
        Ok(z)
    }

    /// One full sweep; returns the statistics and advances the state.
    pub fn sweep(&mut self, cfg: &SolverConfig) -> Result<SweepStats> {
        let lagrangian_start = self.lagrangian(cfg)?;
        let zu = self.unfold_z()?;
        let rho = self.rho;
        let updated: Vec<(PairState, usize)> = self
            .pairs
            .par_iter()
            .zip(zu.par_iter())
            .map(|(p, z)| p.low_rank_sweep(z, cfg, rho))
            .collect::<Result<_>>()?;
        let strict_overrides = updated.iter().map(|(_, c)| c).sum();
        self.pairs = updated.into_iter().map(|(p, _)| p).collect();

        let z_new = self.z_step()?;
        let inf_norm_diff = z_new.max_abs_diff(&self.z);
        self.z = z_new;

        let lagrangian = self.lagrangian(cfg)?;
        let pair_objectives = self
            .pairs
            .iter()
            .map(|p| p.penalty(cfg.gamma, cfg.epsilon))
            .collect();

        let zu = self.unfold_z()?;
        for (p, z) in self.pairs.iter_mut().zip(&zu) {
            p.multiplier = p.multiplier_step(z);
            p.mu *= cfg.growth;
        }
        self.rho *= cfg.growth;
        self.iter += 1;
        Ok(SweepStats {
            inf_norm_diff,
            lagrangian_start,
            lagrangian,
            pair_objectives,
            strict_overrides,
        })
    }
}

/// Complete `t` from the entries selected by `mask`.
pub fn lrtc_solve(
    t: &DenseTensor,
    mask: &SamplingMask,
    cfg: &SolverConfig,
) -> Result<RecoveryReport> {
    let start = Instant::now();
    let mut state = LrtcState::new(t, mask, cfg)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut notes =
        vec!["beta scales each pair's penalty; coupling weights are unscaled".to_string()];
    if cfg.max_iter == 0 {
        notes.push("max_iter = 0: returning the initialization".into());
    }
    while state.iter < cfg.max_iter {
        let s = state.sweep(cfg)?;
        trace.push(TraceRow {
            iter: state.iter,
            inf_norm_diff: s.inf_norm_diff,
            lagrangian: s.lagrangian,
            lagrangian_start: s.lagrangian_start,
            pair_objectives: s.pair_objectives,
            strict_overrides: s.strict_overrides,
            seconds: start.elapsed().as_secs_f64(),
            robust: None,
        });
        if s.inf_norm_diff <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(RecoveryReport {
        low_rank: state.z,
        sparse: None,
        noise: None,
        iterations: state.iter,
        trace,
        converged,
        metrics: Default::default(),
        wall_time: start.elapsed(),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_lowrank, gen_mask};

    #[test]
    fn full_mask_returns_input_at_first_iteration() {
        let t = gen_lowrank(&[6, 5, 4], 2, 3).unwrap();
        let mask = SamplingMask::full(t.shape()).unwrap();
        let rep = lrtc_solve(&t, &mask, &SolverConfig::default()).unwrap();
        assert_eq!(rep.low_rank, t);
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn zero_tensor_stays_zero() {
        let t = DenseTensor::zeros(&[5, 4, 3]).unwrap();
        let mask = gen_mask(t.shape(), 0.4, 1).unwrap();
        let rep = lrtc_solve(&t, &mask, &SolverConfig::default()).unwrap();
        assert_eq!(rep.low_rank.max_abs(), 0.0);
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let t = gen_lowrank(&[6, 5, 4], 2, 3).unwrap();
        let mask = gen_mask(t.shape(), 0.5, 2).unwrap();
        let cfg = SolverConfig {
            max_iter: 0,
            ..Default::default()
        };
        let rep = lrtc_solve(&t, &mask, &cfg).unwrap();
        assert_eq!(rep.low_rank, mask.project(&t));
        assert!(!rep.converged);
        assert!(rep.trace.is_empty());
    }

    #[test]
    fn rejects_mismatched_mask() {
        let t = DenseTensor::zeros(&[5, 4, 3]).unwrap();
        let mask = SamplingMask::full(&[5, 4, 2]).unwrap();
        assert!(lrtc_solve(&t, &mask, &SolverConfig::default()).is_err());
    }
}
