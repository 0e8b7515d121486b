//! # qmine
//!
//! Estimation of von Neumann entropy and quantum mutual information by
//! minimising a Donsker-Varadhan style variational loss over a simulated
//! parameterized quantum circuit.
//!
//! - [`qmatrix`]: dense complex linear algebra (Jacobi eigensolver, matrix
//!   functions, Kronecker product, partial trace, text serialization).
//! - [`states`]: density matrices, seeded random states of prescribed rank, and
//!   the exact entropy / mutual-information oracle.
//! - [`qdvr`]: the Gibbs functional `f`, its trace-scaled restriction `g`, and
//!   the explicit near-optimal operator construction.
//! - [`pqc`]: layered rotation circuit acting on density matrices, measurement,
//!   parameter-shift and analytic gradients.
//! - [`trainer`]: the optimisation loop, entropy and mutual-information
//!   estimators, and copy-budget accounting.
//! - [`cli`] / [`verify`]: the command-line harness and its invariant suite.

#![forbid(unsafe_code)]

pub mod cli;
pub mod error;
pub mod pqc;
pub mod qdvr;
pub mod qmatrix;
pub mod states;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};

/// Independent sub-stream seed (SplitMix64 finaliser over `base` and `stream`).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
