//! Principal joint SVD-type block diagonalization.
//!
//! Given matrices `B_1, …, B_N` of size `n1 × n2` and a partition
//! `τ = (k_1, …, k_t)` of `k`, find orthonormal `U` (`n1 × k`) and `V`
//! (`n2 × k`) maximizing the mass `Σ_ℓ ‖BDiag_τ(Uᴴ B_ℓ V)‖_F²` that lands on the
//! diagonal blocks.
//!
//! * [`ascf`] alternates orthonormal polar factors of the two partial
//!   gradients (Gauss-Seidel or Jacobi updating).
//! * [`locg`] wraps that iteration in a locally optimal subspace search over
//!   `[U, residual, previous U]`.
//! * [`generator`] builds planted test problems, [`oracle`] holds slow
//!   reference implementations, [`bench`] runs experiment sweeps.

pub mod ascf;
pub mod bench;
pub mod dynamic;
pub mod error;
pub mod field;
pub mod generator;
pub mod io;
pub mod kernels;
pub mod locg;
pub mod oracle;
pub mod problem;

pub use ascf::{ascf_solve, ascf_step, default_init, InitMode, IterRecord, SolverConfig, SolverReport, Updating};
pub use error::{Error, Result};
pub use field::{Field, FieldKind, Mat};
pub use kernels::{NormEstimate, NormMode, PolarResult};
pub use locg::{locg_solve, LocgConfig};
pub use problem::{block_diag_part, gradients, kkt_residual, objective, GradientPair, IteratePair, Partition, ProblemSet};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
