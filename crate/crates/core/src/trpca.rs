//! Robust PCA `T = L + E + N` with a low-rank `L`, sparse `E` and dense
//! Gaussian `N`, by proximal alternating linearized minimization.
//!
//! Each active mode pair keeps a low-rank copy `G` of the unfolded `L` with
//! multiplier `R`; `F` is the multiplier of `T = L + E + N`. The monitored
//! augmented Lagrangian is
//!
//! ```text
//! Σ β (‖G‖_{L,W} + γ/2 ‖W − Λ̄‖²) + Σ μ/2 ‖L_(k1k2) − G + R/μ‖²
//!   + τ1 ‖E‖₁ + τ2 ‖N‖² + τ/2 ‖T − L − E − N + F/τ‖²
//! ```

use std::time::Instant;

use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::error::{invalid, Result};
use crate::lrtc::{init_pairs, PairState, SweepStats};
use crate::report::{RecoveryReport, RobustTrace, TraceRow};
use crate::tensor::{fold_mode_pair, unfold_mode_pair, DenseTensor};

/// `sign(x) · max(|x| − λ, 0)`.
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x.abs() <= lambda {
        0.0
    } else {
        x.signum() * (x.abs() - lambda)
    }
}

#[derive(Debug, Clone)]
pub struct TrpcaState {
    pub l: DenseTensor,
    pub e: DenseTensor,
    pub n: DenseTensor,
    /// Multiplier of `T = L + E + N`.
    pub f: DenseTensor,
    pub pairs: Vec<PairState>,
    pub rho: f64,
    /// Weight of the `T = L + E + N` coupling.
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub iter: usize,
    t: DenseTensor,
}

impl TrpcaState {
    /// `L⁰ = T`, `G⁰ = unfold(T)`, everything else zero, `W⁰ = Λ̄⁰ = 1`.
    pub fn new(t: &DenseTensor, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if !t.is_finite() {
            return invalid("input tensor must be finite");
        }
        let beta = cfg.resolve_beta(t.ndim())?;
        let pairs = init_pairs(t, &beta, cfg.mu0)?;
        if pairs.is_empty() {
            return invalid("beta disables every mode pair");
        }
        let zeros = DenseTensor::zeros(t.shape())?;
        Ok(Self {
            l: t.clone(),
            e: zeros.clone(),
            n: zeros.clone(),
            f: zeros,
            pairs,
            rho: cfg.rho0,
            tau: cfg.penalty_tau0,
            tau1: cfg.resolve_tau1(t.shape()),
            tau2: cfg.resolve_tau2(t.shape()),
            iter: 0,
            t: t.clone(),
        })
    }

    pub fn observed(&self) -> &DenseTensor {
        &self.t
    }

    fn unfold_l(&self) -> Result<Vec<DenseTensor>> {
        self.pairs
            .iter()
            .map(|p| unfold_mode_pair(&self.l, p.modes.0, p.modes.1))
            .collect()
    }

    /// `T − L − E − N`.
    pub fn residual(&self) -> DenseTensor {
        let mut r = self.t.sub(&self.l);
        r.axpy(-1.0, &self.e);
        r.axpy(-1.0, &self.n);
        r
    }

    pub fn lagrangian(&self, cfg: &SolverConfig) -> Result<f64> {
        let lu = self.unfold_l()?;
        let low_rank: f64 = self
            .pairs
            .iter()
            .zip(&lu)
            .map(|(p, l)| p.penalty(cfg.gamma, cfg.epsilon) + p.coupling(l))
            .sum();
        let inv = 1.0 / self.tau;
        let fit: f64 = self
            .residual()
            .data()
            .iter()
            .zip(self.f.data())
            .map(|(&r, &f)| {
                let v = r + f * inv;
                v * v
            })
            .sum();
        let n2 = self.n.frobenius_norm().powi(2);
        Ok(low_rank + self.tau1 * self.e.l1_norm() + self.tau2 * n2 + 0.5 * self.tau * fit)
    }

    /// `L⁺ = (Σ(μ fold(G) − fold(R)) + τ(T − E − N) + F + ρL) / (Σμ + τ + ρ)`.
    pub fn l_step(&self) -> Result<DenseTensor> {
        let shape = self.l.shape().to_vec();
        let mut num = self.l.scale(self.rho);
        let mut den = self.rho + self.tau;
        for p in &self.pairs {
            let (k1, k2) = p.modes;
            num.axpy(p.mu, &fold_mode_pair(&p.aux, k1, k2, &shape)?);
            num.axpy(-1.0, &fold_mode_pair(&p.multiplier, k1, k2, &shape)?);
            den += p.mu;
        }
        let mut fit = self.t.sub(&self.e);
        fit.axpy(-1.0, &self.n);
        num.axpy(self.tau, &fit);
        num.axpy(1.0, &self.f);
        Ok(num.scale(1.0 / den))
    }

    /// Soft-thresholded average of `T − L − N + F/τ` (weight τ) and `E` (weight ρ).
    pub fn e_step(&self) -> DenseTensor {
        let (tau, rho) = (self.tau, self.rho);
        let thresh = self.tau1 / (tau + rho);
        let mut out = self.e.clone();
        let it = self
            .t
            .data()
            .iter()
            .zip(self.l.data())
            .zip(self.n.data())
            .zip(self.f.data());
        for (e, (((&t, &l), &n), &f)) in out.data_mut().iter_mut().zip(it) {
            let arg = (tau * (t - l - n) + f + rho * *e) / (tau + rho);
            *e = soft_threshold(arg, thresh);
        }
        out
    }

    /// `N⁺ = (τ(T − L − E) + F + ρN) / (2τ2 + τ + ρ)`.
    pub fn n_step(&self) -> DenseTensor {
        let den = 2.0 * self.tau2 + self.tau + self.rho;
        let mut out = self.n.clone();
        let it = self
            .t
            .data()
            .iter()
            .zip(self.l.data())
            .zip(self.e.data())
            .zip(self.f.data());
        for (n, (((&t, &l), &e), &f)) in out.data_mut().iter_mut().zip(it) {
            *n = (self.tau * (t - l - e) + f + self.rho * *n) / den;
        }
        out
    }

    /// `F⁺ = F + τ(T − L − E − N)`.
    pub fn f_step(&self) -> DenseTensor {
        let mut f = self.f.clone();
        f.axpy(self.tau, &self.residual());
        f
    }

    /// One full sweep; advances the state.
    pub fn sweep(&mut self, cfg: &SolverConfig) -> Result<SweepStats> {
        let lagrangian_start = self.lagrangian(cfg)?;
        let lu = self.unfold_l()?;
        let rho = self.rho;
        let updated: Vec<(PairState, usize)> = self
            .pairs
            .par_iter()
            .zip(lu.par_iter())
            .map(|(p, l)| p.low_rank_sweep(l, cfg, rho))
            .collect::<Result<_>>()?;
        let strict_overrides = updated.iter().map(|(_, c)| c).sum();
        self.pairs = updated.into_iter().map(|(p, _)| p).collect();

        let l_new = self.l_step()?;
        let inf_norm_diff = l_new.max_abs_diff(&self.l);
        self.l = l_new;
        self.e = self.e_step();
        self.n = self.n_step();

        let lagrangian = self.lagrangian(cfg)?;
        let pair_objectives = self
            .pairs
            .iter()
            .map(|p| p.penalty(cfg.gamma, cfg.epsilon))
            .collect();

        let lu = self.unfold_l()?;
        for (p, l) in self.pairs.iter_mut().zip(&lu) {
            p.multiplier = p.multiplier_step(l);
            p.mu *= cfg.growth;
        }
        self.f = self.f_step();
        self.rho *= cfg.growth;
        self.tau *= cfg.growth;
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

/// Decompose `t` into low-rank, sparse and Gaussian parts.
pub fn trpca_solve(t: &DenseTensor, cfg: &SolverConfig) -> Result<RecoveryReport> {
    let start = Instant::now();
    let mut state = TrpcaState::new(t, cfg)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut notes = vec![
        "beta scales each pair's penalty; coupling weights and the L update are unscaled"
            .to_string(),
        format!("tau1 = {:e}, tau2 = {:e}", state.tau1, state.tau2),
    ];
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
            robust: Some(RobustTrace {
                e_l1: state.e.l1_norm(),
                n_fro: state.n.frobenius_norm(),
                residual_fro: state.residual().frobenius_norm(),
            }),
        });
        if s.inf_norm_diff <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(RecoveryReport {
        low_rank: state.l,
        sparse: Some(state.e),
        noise: Some(state.n),
        iterations: state.iter,
        trace,
        converged,
        metrics: Default::default(),
        wall_time: start.elapsed(),
        notes,
    })
}
