//! Solver configuration shared by both recovery algorithms.

use crate::error::{invalid, Result};
use crate::penalty::ShrinkRule;

/// All tunable scalars of the two solvers.
///
/// `growth` multiplies the coupling weights μ, the proximal weight ρ and
/// (for robust PCA) the data-fit weight τ after every sweep; `growth = 1`
/// freezes them.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub epsilon: f64,
    /// Per-pair weights in lexicographic pair order; `None` means uniform.
    pub beta: Option<Vec<f64>>,
    pub mu0: f64,
    pub rho0: f64,
    /// ρ1 = gamma1 · μ, the linearization weight of the low-rank block.
    pub gamma1: f64,
    pub growth: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Initial weight of the `T = L + E + N` coupling (robust PCA only).
    pub penalty_tau0: f64,
    /// Sparse-noise weight; `None` derives it from the data shape.
    pub tau1: Option<f64>,
    /// Multiplier applied to the derived default of `tau1`.
    pub tau1_scale: f64,
    /// Gaussian-noise weight; `None` means `10 · tau1`.
    pub tau2: Option<f64>,
    pub shrink_rule: ShrinkRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1e4,
            epsilon: 0.01,
            beta: None,
            mu0: 1e-3,
            rho0: 1e-3,
            gamma1: 1.1,
            growth: 1.05,
            tol: 1e-5,
            max_iter: 500,
            penalty_tau0: 1e-3,
            tau1: None,
            tau1_scale: 1.0,
            tau2: None,
            shrink_rule: ShrinkRule::Threshold,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return invalid(format!("{name} must be finite and > 0, got {v}"));
    }
    Ok(())
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.gamma)?;
        positive("epsilon", self.epsilon)?;
        positive("mu0", self.mu0)?;
        positive("rho0", self.rho0)?;
        positive("tol", self.tol)?;
        positive("penalty_tau0", self.penalty_tau0)?;
        positive("tau1_scale", self.tau1_scale)?;
        if !(self.gamma1 > 1.0 && self.gamma1.is_finite()) {
            return invalid(format!("gamma1 must be > 1, got {}", self.gamma1));
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return invalid(format!("growth must be >= 1, got {}", self.growth));
        }
        if let Some(t) = self.tau1 {
            positive("tau1", t)?;
        }
        if let Some(t) = self.tau2 {
            positive("tau2", t)?;
        }
        if let Some(b) = &self.beta {
            check_beta(b)?;
        }
        Ok(())
    }

    /// β for an `ndim`-way tensor: the configured weights, or uniform.
    pub fn resolve_beta(&self, ndim: usize) -> Result<Vec<f64>> {
        if ndim < 2 {
            return invalid("tensor recovery needs at least two modes");
        }
        let pairs = ndim * (ndim - 1) / 2;
        match &self.beta {
            None => Ok(vec![1.0 / pairs as f64; pairs]),
            Some(b) if b.len() != pairs => invalid(format!(
                "beta has {} entries but a {ndim}-way tensor has {pairs} mode pairs",
                b.len()
            )),
            Some(b) => {
                check_beta(b)?;
                Ok(b.clone())
            }
        }
    }

    /// `tau1`, defaulting to `tau1_scale / sqrt(max(I1, I2) · I3 · … · IN)`.
    pub fn resolve_tau1(&self, shape: &[usize]) -> f64 {
        self.tau1.unwrap_or_else(|| {
            let plane_max = shape[0].max(*shape.get(1).unwrap_or(&1)) as f64;
            let rest: usize = shape.iter().skip(2).product();
            self.tau1_scale / (plane_max * rest as f64).sqrt()
        })
    }

    pub fn resolve_tau2(&self, shape: &[usize]) -> f64 {
        self.tau2.unwrap_or_else(|| 10.0 * self.resolve_tau1(shape))
    }
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return invalid(format!(
                "line {}: expected `key = value`, got {raw:?}",
                no + 1
            ));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return invalid(format!("line {}: empty key or value", no + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .or_else(|_| invalid(format!("{key}: cannot parse {v:?} as a number")))
}

impl SolverConfig {
    /// Keys accepted by [`SolverConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "gamma",
        "epsilon",
        "beta",
        "mu0",
        "rho0",
        "gamma1",
        "growth",
        "tol",
        "max_iter",
        "tau0",
        "tau1",
        "tau1_scale",
        "tau2",
        "strict_prox",
    ];

    /// Set one field from its textual form. `beta`, `tau1` and `tau2` accept
    /// `auto` for the derived default.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let auto = value == "auto";
        match key {
            "gamma" => self.gamma = parse_f64(key, value)?,
            "epsilon" => self.epsilon = parse_f64(key, value)?,
            "mu0" => self.mu0 = parse_f64(key, value)?,
            "rho0" => self.rho0 = parse_f64(key, value)?,
            "gamma1" => self.gamma1 = parse_f64(key, value)?,
            "growth" => self.growth = parse_f64(key, value)?,
            "tol" => self.tol = parse_f64(key, value)?,
            "tau0" => self.penalty_tau0 = parse_f64(key, value)?,
            "tau1_scale" => self.tau1_scale = parse_f64(key, value)?,
            "tau1" => {
                self.tau1 = if auto {
                    None
                } else {
                    Some(parse_f64(key, value)?)
                }
            }
            "tau2" => {
                self.tau2 = if auto {
                    None
                } else {
                    Some(parse_f64(key, value)?)
                }
            }
            "max_iter" => {
                self.max_iter = value
                    .parse()
                    .or_else(|_| invalid(format!("max_iter: cannot parse {value:?}")))?
            }
            "beta" => {
                self.beta = if auto {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(|x| parse_f64(key, x.trim()))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "strict_prox" => {
                self.shrink_rule = match value {
                    "true" | "1" => ShrinkRule::Strict,
                    "false" | "0" => ShrinkRule::Threshold,
                    _ => {
                        return invalid(format!("strict_prox: expected true/false, got {value:?}"))
                    }
                }
            }
            _ => return invalid(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    /// Apply `key = value` text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Every field as `(key, value)`, in [`SolverConfig::KEYS`] order.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x:e}"));
        let beta = self.beta.as_ref().map_or("auto".to_string(), |b| {
            b.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        });
        [
            ("gamma", format!("{:e}", self.gamma)),
            ("epsilon", format!("{:e}", self.epsilon)),
            ("beta", beta),
            ("mu0", format!("{:e}", self.mu0)),
            ("rho0", format!("{:e}", self.rho0)),
            ("gamma1", format!("{}", self.gamma1)),
            ("growth", format!("{}", self.growth)),
            ("tol", format!("{:e}", self.tol)),
            ("max_iter", self.max_iter.to_string()),
            ("tau0", format!("{:e}", self.penalty_tau0)),
            ("tau1", opt(self.tau1)),
            ("tau1_scale", format!("{}", self.tau1_scale)),
            ("tau2", opt(self.tau2)),
            (
                "strict_prox",
                (self.shrink_rule == ShrinkRule::Strict).to_string(),
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

fn check_beta(b: &[f64]) -> Result<()> {
    if b.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return invalid("beta entries must be finite and non-negative");
    }
    let sum: f64 = b.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return invalid(format!("beta must sum to 1, sums to {sum}"));
    }
    Ok(())
}
