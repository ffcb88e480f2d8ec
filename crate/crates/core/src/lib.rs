//! Stock-price processes that share the law of geometric Brownian motion on a
//! discrete trading grid while admitting arbitrary continuous-time option prices.
//!
//! The crate is organised around the pieces of that construction:
//!
//! - [`expfam`]: exponential families of densities, with the lognormal family
//!   that GBM marginals live in.
//! - [`drift`]: drifts that make a diffusion with a prescribed volatility
//!   transport a prescribed curve of densities, both by quadrature and in
//!   closed form.
//! - [`sim`]: exact and Euler path simulation of GBM and of the grid-matching
//!   processes, under the objective and the risk-neutral measure.
//! - [`pricing`]: Black–Scholes prices with the piecewise effective volatility
//!   of the grid-matching processes, no-arbitrage bounds and volatility inversion.
//! - [`stats`]: KS tests, grid and off-grid diagnostics, Fokker–Planck residuals
//!   and the constant-volatility counterexample.
//! - [`hedging`]: discrete delta-hedging replication error and model selection.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod error;
pub mod expfam;
pub mod grid;
pub mod hedging;
pub mod market;
pub mod math;
pub mod pricing;
pub mod quadrature;
pub mod sim;
pub mod stats;

pub use crate::error::{Error, Result};
pub use crate::grid::GridSpec;
pub use crate::market::{MarketParams, OptionSpec};
