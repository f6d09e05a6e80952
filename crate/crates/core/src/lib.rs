//! Sum-rate maximisation for multi-cluster satellite-UAV-ground semantic
//! relay networks.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod netmodel;
pub mod oracle;
pub mod output;
pub mod roots;
pub mod scenarios;
pub mod semcom;
pub mod solver;

pub use error::{Error, Result};
