//! Core of `varbandit`: linear bandits whose reward comes from a random
//! parameter, `X_t = a_tᵀθ_t` with `θ_t ~ ν` of mean `θ*` and covariance `Σ`.
//!
//! `no_std` with `alloc`; IO, CLI and file formats live in `varbandit-harness`.

#![no_std]
// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algorithms;
pub mod design;
pub mod environments;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod norms;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use rng::{derive_rng_stream, RngStream};
