//! Low-rank tensor recovery with the minimax logarithmic concave penalty.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`] and [`fourier`]: dense N-way storage, mode-pair unfoldings
//!   and the tube DFT.
//! * [`algebra`]: t-product, t-SVD, tubal/multi rank and TNN.
//! * [`penalty`]: the penalty family, its weight-minimization form and the
//!   spectral proximal operators.
//! * [`lrtc`] and [`trpca`]: the two alternating proximal solvers.
//! * [`data`], [`metrics`], [`io`]: synthetic instances, quality metrics
//!   and the `TNS1` tensor file format.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod config;
pub mod data;
pub mod error;
pub mod fourier;
pub mod io;
pub mod lrtc;
pub mod metrics;
pub mod penalty;
pub mod report;
pub mod rng;
pub mod tensor;
pub mod trpca;

pub use algebra::{
    conj_transpose, fourier_singular_values, multi_rank, n_tubal_rank, t_product, t_svd, tnn,
    tubal_rank, TubalFactorization,
};
pub use config::{parse_key_values, SolverConfig};
pub use data::{add_mixed_noise, gen_lowrank, gen_mask, rescale_unit, NoiseSpec, SamplingMask};
pub use error::{Error, Result};
pub use fourier::{dft_mode3, idft_mode3, idft_mode3_real, ComplexSliceStack};
pub use io::{load_tensor, read_tensor, save_tensor, write_tensor};
pub use lrtc::{lrtc_solve, LrtcState, PairState, SweepStats};
pub use metrics::{ergas, psnr, ssim};
pub use nalgebra::DMatrix;
pub use penalty::{PenaltyParams, ShrinkRule, WeightState};
pub use report::{RecoveryReport, RobustTrace, TraceRow};
pub use tensor::{fold_mode_pair, mode_pairs, unfold_mode_pair, DenseTensor};
pub use trpca::{soft_threshold, trpca_solve, TrpcaState};
