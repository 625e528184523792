//! Area-tilted integer random walks on the half-line.
//!
//! A bridge `X_0 = a, ..., X_N = b` with `X_i >= 0` and i.i.d. steps of law
//! `p` is weighted by `exp(-λ Σ_{i=1}^{N-1} V(X_i))`. The crate computes the
//! exact finite-volume law on a truncated height lattice ([`transfer`]), the
//! infinite-volume spectral data of the transfer kernel ([`spectral`]),
//! samples paths exactly or by heat bath ([`sampler`]), checks everything
//! against brute force on small instances ([`oracle`]) and runs the scaling
//! sweeps in [`experiments`].
//!
//! Data-parallel work goes through [`exec`]; building without the default
//! `parallel` feature makes every [`exec::Execution`] sequential.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiments;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod stats;
pub mod transfer;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{solve_h, BridgeSpec, Potential, StepDistribution};
pub use rng::StreamRng;
pub use transfer::{build_tables, build_tables_auto, TransferTables};
