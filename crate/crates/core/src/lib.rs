//! Exact, asymptotic and Monte Carlo analysis of the coupon collector's
//! problem with `m` complete sets (the double Dixie cup problem).
//!
//! The crate is organised by engine:
//!
//! - [`model`] builds coupon-probability vectors from weight families
//!   (equal, Zipf, log-Zipf, explicit) and expands the log-Zipf normalizer.
//! - [`exact`] evaluates `E[T_m]`, `E[T_m(T_m+1)]` and `V[T_m]` by quadrature
//!   of their integral representations, and carries small-`N` oracles.
//! - [`asymptotic`] evaluates the large-`N` expansions for the log-Zipf and
//!   equal families term by term.
//! - [`limit`] covers the Gumbel limit law and the `Λ_N` functional.
//! - [`sim`] is a reproducible, parallel Monte Carlo simulator.

pub mod asymptotic;
pub mod error;
pub mod exact;
pub mod limit;
pub mod model;
pub mod quadrature;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use model::{CouponDistribution, CouponFamily};
pub use quadrature::QuadratureConfig;
