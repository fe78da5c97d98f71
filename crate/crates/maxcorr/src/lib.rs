//! IO, CLI and Monte Carlo study harness around the `maxcorr-core`
//! screening estimator. The core types are re-exported at the root.

pub mod cli;
pub mod io;
pub mod sim;

pub use maxcorr_core::*;
