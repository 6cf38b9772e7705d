//! Inversion of impedance spectra for the distribution of relaxation times.

pub mod config;
pub mod drt;
pub mod experiments;
mod error;
pub mod forward;
pub mod io;
pub mod nlsfit;
pub mod param_choice;
pub mod peaks;
pub mod regsolve;

pub use error::{Error, Result};
