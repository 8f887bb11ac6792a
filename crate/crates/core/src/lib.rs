//! Increasing-profit analysis for one-dimensional general diffusion markets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbitrage;
pub mod backtest;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
pub mod measures;
pub mod model;
pub mod piecewise;
pub mod quadrature;
pub mod simulate;

pub use error::{Error, Result};
