//! Basis pursuit, `min ||s||_1 s.t. A s = b`, solved by minimizing the
//! dissipation potential `f(x) = 1^T x + b^T (A X A^T)^{-1} b` over positive
//! conductances `x`.
//!
//! Every iteration is one weighted least-squares (Laplacian) solve, so the
//! schemes here are IRLS methods with iteration bounds:
//!
//! - `pgs`: entropic mirror descent (multiplicative weights),
//! - `ags`: Nesterov-style accelerated gradient with Euclidean projections,
//! - `ags2`: the accelerated scheme with coordinate-scaled steps.
//!
//! Each iterate `x^k` induces a feasible point `s^k = q(x^k)` together with a
//! dual certificate bounding `||s^k||_1 - OPT`.
//!
//! ```
//! use bp_core::{instance::random_instance, solvers::{solve, SolverConfig, Status}};
//!
//! let inst = random_instance(20, 10, 0.2, 1).unwrap();
//! let run = solve(&inst, &SolverConfig::new("pgs")).unwrap();
//! assert_eq!(run.status, Status::GapReached);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dissipation;
pub mod error;
pub mod instance;
pub mod io;
pub mod laplacian;
pub mod oracle;
pub mod solvers;

pub use error::{Error, Result};
pub use instance::BpInstance;
pub use laplacian::WeightVector;
