//! The generic stabilized one-step accumulator.
//!
//! One term is contributed per step `j`: the plug-in value of the selected
//! parameter plus its canonical gradient evaluated at the next observation,
//! weighted by the inverse of the estimated standard deviation of that
//! gradient. Keeping the weighted sum and the sum of inverse standard
//! deviations is enough to recover the estimate, the harmonic-mean scale
//! `σ̄` and the Wald-type interval, all in O(1) per step.

use crate::error::Error;
use crate::special::normal_quantile;

/// Running sums of the stabilized one-step estimator.
///
/// With per-step values `v_j = plug_in_j + gradient_j` and scales `σ̂_j`,
/// the estimate is `ψ = Σ v_j/σ̂_j / Σ 1/σ̂_j`, which equals the
/// inverse-σ̂-weighted mean with weights normalized to sum to the number of
/// terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    sum_weighted: f64,
    sum_inv_sigma: f64,
    terms: u64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one estimator term. `sigma_hat` must already be floored away
    /// from zero by the caller.
    pub fn accumulate(
        &mut self,
        plug_in: f64,
        gradient_at_next: f64,
        sigma_hat: f64,
    ) -> Result<(), Error> {
        if !plug_in.is_finite() || !gradient_at_next.is_finite() {
            return Err(Error::NonFinite);
        }
        if sigma_hat <= 0.0 || !sigma_hat.is_finite() {
            return Err(Error::NonPositiveSigma);
        }
        self.sum_weighted += (plug_in + gradient_at_next) / sigma_hat;
        self.sum_inv_sigma += 1.0 / sigma_hat;
        self.terms += 1;
        Ok(())
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    pub fn sum_weighted(&self) -> f64 {
        self.sum_weighted
    }

    pub fn sum_inv_sigma(&self) -> f64 {
        self.sum_inv_sigma
    }

    /// Closes the accumulation: point estimate, harmonic-mean scale and the
    /// two-sided `1 - alpha` interval with half-width
    /// `z_{1-alpha/2} · σ̄ / sqrt(terms)`.
    pub fn finalize(&self, alpha: f64) -> Result<Estimate, Error> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if self.terms == 0 {
            return Err(Error::Empty);
        }
        let psi_hat = self.sum_weighted / self.sum_inv_sigma;
        let sigma_bar = self.terms as f64 / self.sum_inv_sigma;
        let z = normal_quantile(1.0 - alpha / 2.0)?;
        let half_width = z * sigma_bar / libm::sqrt(self.terms as f64);
        Ok(Estimate {
            psi_hat,
            sigma_bar,
            ci_lower: psi_hat - half_width,
            ci_upper: psi_hat + half_width,
            alpha,
            terms: self.terms,
        })
    }
}

/// Finalized point estimate with its Wald-type confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub psi_hat: f64,
    /// Harmonic mean of the per-step scale estimates.
    pub sigma_bar: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub terms: u64,
}

/// Burn-in length: the number of leading observations absorbed into the
/// moment state before any estimator term is accumulated.
///
/// Computes `ceil(max{ (log max{n,p})^{1+ε}, n·exp(-β^{ε-2}) })` with
/// `β² = log(p)/sqrt(n)`, clamped to `[2, n-2]` so that the state can be
/// initialized from two observations and at least one term remains.
pub fn compute_ell_n(n: usize, p: usize, epsilon: f64) -> Result<usize, Error> {
    if n < 4 {
        return Err(Error::SampleTooSmall(n));
    }
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if p < 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let n_f = n as f64;
    let beta_sq = libm::log(p as f64) / libm::sqrt(n_f);
    let slow = libm::pow(libm::log(core::cmp::max(n, p) as f64), 1.0 + epsilon);
    let fast = if beta_sq > 0.0 {
        n_f * libm::exp(-libm::pow(libm::sqrt(beta_sq), epsilon - 2.0))
    } else {
        // p = 1: β = 0 makes the exponent -∞, so this branch vanishes.
        0.0
    };
    let raw = libm::ceil(slow.max(fast)) as usize;
    Ok(raw.clamp(2, n - 2))
}
