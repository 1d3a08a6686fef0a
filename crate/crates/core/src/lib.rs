//! Time-domain simulation of lithium-ion pack charging through a
//! dual-active-bridge converter.
//!
//! The pieces compose bottom-up: [`battery`] steps a Thevenin pack model,
//! [`dab`] maps phase shift to output current and MOSFET loss, [`control`]
//! closes the loop with PID, [`strategy`] decides what to ask for, and
//! [`sim`] runs them together and accounts for energy. [`scenario`] loads a
//! complete setup from TOML and [`cli`] drives it from the command line.

// Validation uses `!(x > 0.0)` style checks on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod cli;
pub mod control;
pub mod dab;
pub mod error;
pub mod scenario;
pub mod sim;
pub mod strategy;

pub use error::{Error, Result};
