//! Hyperspectral single-cube super-resolution with 3D total variation and
//! low-rank tensor regularization, solved by ADMM.
//!
//! The observed low-resolution cube is modelled as `I = D S X + e` where `S`
//! is a Gaussian blur and `D` a decimation. The reconstruction minimizes
//!
//! ```text
//! ||D S X - I||_F^2 + lambda1 * TV(X) + lambda2 * L(X)
//! ```
//!
//! with `L` either the weighted tensor nuclear norm or the tensor MCP
//! penalty over the three mode unfoldings.

pub mod cube_io;
pub mod degradation;
pub mod error;
pub mod lowrank;
pub mod metrics;
pub mod solver;
pub mod synth;
pub mod tensor;
pub mod tv;

pub use degradation::{
    adjoint_degrade, bicubic_upsample, blur, degrade, degrade_noise_free, downsample,
    gaussian_kernel, BlurKernel, DegradationConfig,
};
pub use error::{Error, Result};
pub use lowrank::{McpParams, ModeWeights, SvdFactors};
pub use metrics::MetricsReport;
pub use solver::{solve, IterationRecord, Penalty, SolveOutcome, SolverConfig, SolverState, StopReason};
pub use synth::{synth_cube, SynthConfig};
pub use tensor::{fold, frobenius_norm, unfold, Cube, Dims, Matrix, UnfoldedMatrix};
pub use tv::TvConfig;
