//! Periodic one-dimensional Navier–Stokes–Korteweg solver and traveling-wave
//! toolkit for the isothermal two-phase model with a double-well energy.

pub mod cip;
pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod energy;
pub mod error;
pub mod hermite;
pub mod io;
pub mod quadrature;
pub mod run;
pub mod twave;

pub use error::{NskError, Result};
