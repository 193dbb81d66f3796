//! Command-line driver: strict experiment configs in, CSV/JSON artifacts out.

pub mod config;
pub mod error;
pub mod run;
pub mod suite;
