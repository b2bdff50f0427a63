//! Deterministic dense coding with partially entangled qudit pairs.
//!
//! A state enters every computation through its Schmidt weights `λ`.
//! Local unitaries `U_i` on Alice's side encode letters perfectly iff
//! `Tr(Λ U_i† U_j) = δ_ij` with `Λ = diag(λ)`. This crate builds such
//! sets analytically where constructions exist, searches for them
//! numerically elsewhere, and simulates the encode/measure/decode protocol.

pub mod cli;
pub mod constructions;
pub mod error;
pub mod io;
pub mod linalg;
pub mod protocol;
pub mod qstate;
pub mod search;

pub use error::{Error, Result};
pub use qstate::{entropy, gram_residual, is_orthogonal_set, weighted_inner, OperatorSet, SchmidtVector, Unitary};
pub use search::SearchConfig;
