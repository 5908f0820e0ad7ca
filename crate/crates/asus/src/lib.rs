//! Simulation, file formats and command line for `asus-core`.
//!
//! [`sim`] generates the simulated designs, [`harness`] runs Monte Carlo
//! risk experiments over them, [`format`] reads and writes the CSV and JSON
//! files, and [`cli`] wires everything into the `asus` binary.

pub mod cli;
pub mod error;
pub mod format;
pub mod harness;
pub mod sim;

pub use error::{AsusError, Result};
