//! Monte Carlo engine for stochastic path-dependent volatility (SPDV) models.
//!
//! The spot follows `dS = mu(t,S,M) S dt + sqrt(v) sigma(t,S,M) S dW^s`, the
//! squared volatility `v` is a CIR process and `M` is the running maximum of
//! the spot. This crate carries the numerical pieces:
//!
//! * [`variance`]: full truncation Euler and backward Euler-Maruyama steps for
//!   the CIR leg.
//! * [`leverage`]: leverage and drift functions with their regularity
//!   constants, plus grid extraction of those constants.
//! * [`sim`]: the log-Euler spot scheme with node or Brownian-bridge running
//!   maximum, refinement-coupled paths and deterministic path streams.
//! * [`critical`]: Feller gates and the critical horizon below which the
//!   strong order 1/2 is guaranteed.
//! * [`convergence`]: strong and weak error ladders and log-log slope fits.
//! * [`pricing`]: payoff evaluation and Black-Scholes reference prices.
//!
//! The crate is `no_std` and only needs `alloc`. Parallel execution is
//! injected through [`exec::PathExecutor`].
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod convergence;
pub mod critical;
mod error;
pub mod exec;
pub mod leverage;
pub mod math;
pub mod pricing;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod variance;

pub use error::{Error, Result};
pub use exec::{PathExecutor, Sequential};
pub use leverage::{DriftConstants, DriftFunction, LeverageConstants, LeverageFunction};
pub use sim::{MaxMode, SimGrid, SpdvModel};
pub use variance::{CirParams, VarianceScheme};
