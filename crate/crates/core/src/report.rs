//! Solver output: recovered tensors plus a per-iteration trace.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Duration;

use crate::tensor::DenseTensor;

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// ‖X^{k+1} − X^k‖_∞ for the primary iterate.
    pub inf_norm_diff: f64,
    /// Augmented Lagrangian after the primal updates, multipliers of the sweep start.
    pub lagrangian: f64,
    /// Augmented Lagrangian at the start of the sweep.
    pub lagrangian_start: f64,
    /// β-weighted penalty of each active mode pair.
    pub pair_objectives: Vec<f64>,
    /// Singular values zeroed by the strict rule that the threshold rule kept.
    pub strict_overrides: usize,
    /// Seconds since the solver started.
    pub seconds: f64,
    pub robust: Option<RobustTrace>,
}

/// Extra trace columns of the robust PCA solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustTrace {
    pub e_l1: f64,
    pub n_fro: f64,
    pub residual_fro: f64,
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    /// Completed tensor (LRTC) or low-rank part (robust PCA).
    pub low_rank: DenseTensor,
    pub sparse: Option<DenseTensor>,
    pub noise: Option<DenseTensor>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub iterations: usize,
    pub metrics: BTreeMap<String, f64>,
    pub wall_time: Duration,
    /// Free-form notes for report headers.
    pub notes: Vec<String>,
}

impl RecoveryReport {
    /// Write the trace as CSV.
    ///
    /// Columns: `iter,inf_norm_diff,lagrangian,seconds`, then
    /// `e_l1,n_fro,residual_fro` for robust PCA, then `strict_overrides`
    /// when `strict` is set.
    pub fn write_trace_csv<W: Write>(&self, mut out: W, strict: bool) -> std::io::Result<()> {
        let robust =
            self.trace.first().is_some_and(|r| r.robust.is_some()) || self.sparse.is_some();
        let mut header = String::from("iter,inf_norm_diff,lagrangian,seconds");
        if robust {
            header.push_str(",e_l1,n_fro,residual_fro");
        }
        if strict {
            header.push_str(",strict_overrides");
        }
        writeln!(out, "{header}")?;
        for r in &self.trace {
            write!(
                out,
                "{},{:e},{:e},{:.6}",
                r.iter, r.inf_norm_diff, r.lagrangian, r.seconds
            )?;
            if robust {
                let x = r.robust.unwrap_or(RobustTrace {
                    e_l1: f64::NAN,
                    n_fro: f64::NAN,
                    residual_fro: f64::NAN,
                });
                write!(out, ",{:e},{:e},{:e}", x.e_l1, x.n_fro, x.residual_fro)?;
            }
            if strict {
                write!(out, ",{}", r.strict_overrides)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
