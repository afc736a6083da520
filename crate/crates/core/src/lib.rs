//! Asymptotic k-core sizes of sparse random graphs.
//!
//! The crate has two halves that check each other:
//!
//! * [`analytic`] solves the branching-process fixed-point equations that give
//!   the limiting k-core fraction of `G(n, λ/n)`, of finite-type inhomogeneous
//!   graphs and of the rank-1 power-law kernel `c/√(xy)`.
//! * [`graph`], [`peel`] and [`bp`] measure the same quantities empirically by
//!   generating graphs, peeling their cores and simulating the branching
//!   process directly.
//!
//! [`harness`] ties both halves together into config-driven sweeps that emit
//! CSV tables.

pub mod analytic;
pub mod bp;
pub mod error;
pub mod graph;
pub mod harness;
pub mod peel;
pub mod seed;

pub use error::{Error, Result};
