//! Restoration of blurred, noisy color images modelled as the tensor equation
//! `T *3 F = G + N`, where `T` is an order-6 Toeplitz blur operator built from
//! a 3D Gaussian and `*3` is the Einstein product.
//!
//! The solvers are cascadic tensor multigrid (CTMG) and its economic variant
//! (ECTMG): an exact solve on the coarsest grid, followed on every finer grid
//! by quadratic prolongation, Perona-Malik edge-preserving denoising and a
//! fixed number of tensor Krylov (BiCG, CGS or CR) smoothing sweeps.

pub mod degradation;
pub mod error;
pub mod eten;
pub mod krylov;
pub mod metrics;
pub mod multigrid;
pub mod tensor;

pub use degradation::{apply_blur, build_toeplitz, degrade, gaussian_psf, GaussianPsf, NoiseSpec};
pub use error::{Error, Result};
pub use krylov::{make_operator_action, smooth, LinearOperator, SmootherKind, SolveControl, SolveOutcome};
pub use metrics::{psnr, relative_error, QualityScore, RestorationReport};
pub use multigrid::{
    baseline, cascade, ctmg, ectmg, CascadeConfig, CascadeOutcome, IterationSchedule, Method, PmParams,
    ScheduleKind,
};
pub use tensor::{
    direct_solve, einstein_product, fro_norm, inner, refold, unfold_operator, unfold_tensor, Dims3,
    ImageTensor, Operator6,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
