//! Single-pass estimation of the maximal absolute correlation between an
//! outcome `Y` and `p` predictors `X_1..X_p`.
//!
//! The estimand is `max_k |Corr(X_k, Y)|`. Estimating a maximum of
//! correlations is non-regular when the best predictor is not unique, so a
//! naive plug-in interval is unreliable. This crate implements a stabilized
//! one-step estimator instead: observations are consumed in order, and at
//! each step the current best index is selected from the data seen so far,
//! the plug-in estimate is bias-corrected by the canonical gradient evaluated
//! at the *next*, untouched observation, and the term is weighted by the
//! inverse of its estimated standard deviation. The resulting sum is a
//! martingale, which yields a Wald-type confidence interval whose lower bound
//! is valid without uniqueness assumptions.
//!
//! Everything runs in one pass over the data: the sufficient state is the set
//! of empirical moments `E[X_k^r Y^s]`, `r + s <= 4`, kept per predictor, so
//! time is O(np) and memory is O(p) regardless of the stream length.
//!
//! The crate is `no_std` (with `alloc`). IO, the CLI and the Monte Carlo
//! simulation harness live in the companion `maxcorr` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod driver;
pub mod estimator;
pub mod gradient;
pub mod moments;
pub mod special;

mod error;

pub use driver::{est_psi, est_psi_rows, Diagnostics, ScreenConfig, ScreenResult};
pub use error::{Error, EstError};
pub use estimator::{compute_ell_n, Accumulator, Estimate};
pub use gradient::{calc_d, calc_sig_hat, gradient_second_moment, remainder, CorrSummary};
pub use moments::{Index, MomentState, Observation, Sign};
