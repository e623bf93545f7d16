//! Exact and QED-asymptotic performance analysis of many-server queues.
//!
//! The crate is organised bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`specfun`] | normal law, log-gamma, Poisson tails, ζ at half-integers |
//! | [`quadrature`] | adaptive Gauss–Kronrod integration |
//! | [`exact`] | Erlang B/C, M/M/s, M/M/s/n, Erlang-A and a birth–death solver |
//! | [`qed`] | Halfin–Whitt limits, refinements, bounds and diffusion laws |
//! | [`grw`] | bulk-service queue and the Gaussian random-walk maximum |
//! | [`dimensioning`] | delay-target and cost-based staffing rules |
//! | [`time_varying`] | offered load, PSA and MOL schedules |
//! | [`sim`] | stochastic simulation used to validate all of the above |
//!
//! Service rates default to one, so `lambda` doubles as the offered load
//! unless a [`exact::QueueModel`] says otherwise.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Frozen oracle values in unit tests keep every digit the oracle printed.
#![cfg_attr(test, allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping))]

pub mod dimensioning;
pub mod error;
pub mod exact;
pub mod grw;
pub mod qed;
pub mod quadrature;
pub mod sim;
pub mod specfun;
pub mod time_varying;

pub use error::{QedError, Result};
