//! The single-pass screening driver.
//!
//! Consumes an ordered observation stream once. The first `ℓ` observations
//! only seed the moment state; for every later step the driver selects the
//! predictor with the maximal absolute empirical correlation, takes the
//! plug-in value `sign · corr`, bias-corrects it with the canonical gradient
//! evaluated at the next unseen observation, and feeds the term to the
//! stabilized accumulator with its estimated scale. Order matters: each term
//! may depend on the past only through the moment state, which is what makes
//! the sum a martingale.
//!
//! In chunked mode the selection, plug-in and scale are refreshed only at
//! chunk boundaries instead of every step; the moment state itself still
//! absorbs every observation. Chunking trades refresh cost for a coarser
//! selection schedule and reproduces the chunk-of-`(n-ℓ)/10` evaluation
//! scheme; the fully online mode is simply "every term is its own chunk".

use alloc::vec::Vec;

use crate::error::{Error, EstError};
use crate::estimator::{compute_ell_n, Accumulator};
use crate::gradient::{gradient_second_moment, CorrSummary};
use crate::moments::{Index, MomentState, Observation};

/// Tuning knobs for [`est_psi`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenConfig {
    /// Two-sided miscoverage of the confidence interval.
    pub alpha: f64,
    /// Exponent in the burn-in schedule.
    pub epsilon: f64,
    /// Fixed burn-in overriding the schedule; clamped to `[2, n - 2]`.
    pub ell_override: Option<usize>,
    /// Floor applied to the squared per-step scale before weighting, so a
    /// near-degenerate step cannot dominate the weights.
    pub sigma_floor_sq: f64,
    /// Variances at or below this are treated as degenerate (correlation 0).
    pub var_floor: f64,
    /// Number of selection refreshes; `None` refreshes at every step.
    pub chunk_count: Option<usize>,
    /// Map every coordinate through `2/(1+e^{-z}) - 1` into `(-1, 1)`.
    pub apply_sigmoid: bool,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            epsilon: 0.5,
            ell_override: None,
            sigma_floor_sq: 1e-4,
            var_floor: 1e-12,
            chunk_count: None,
            apply_sigmoid: false,
        }
    }
}

impl ScreenConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 2.0) {
            return Err(Error::InvalidEpsilon(self.epsilon));
        }
        if !self.sigma_floor_sq.is_finite() || self.sigma_floor_sq <= 0.0 {
            return Err(Error::InvalidFloor(self.sigma_floor_sq));
        }
        if !self.var_floor.is_finite() || self.var_floor <= 0.0 {
            return Err(Error::InvalidFloor(self.var_floor));
        }
        if self.chunk_count == Some(0) {
            return Err(Error::InvalidChunkCount);
        }
        Ok(())
    }
}

/// Outcome of a screen: the estimate, its interval, the test decision and
/// run diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenResult {
    pub psi_hat: f64,
    pub sigma_bar: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub n: usize,
    pub ell_n: usize,
    /// One-sided test of "no correlated predictor": rejects (at level
    /// `alpha / 2`) when the lower confidence bound is above zero.
    pub reject_null: bool,
    pub diagnostics: Diagnostics,
}

/// Side information gathered during the pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Selection in force at the final accumulation step.
    pub selected: Index,
    /// Terms whose gradient was zeroed because the selected predictor or the
    /// outcome had degenerate variance.
    pub degenerate_gradient_terms: u64,
    /// Terms whose squared scale was raised to the floor.
    pub floored_sigma_terms: u64,
    /// Observations with a coordinate outside `[-1, 1]` (after the sigmoid,
    /// if enabled). Harmless for the estimate, but the boundedness that
    /// backs the interval's guarantees is then an assumption on the data.
    pub rows_outside_unit_range: u64,
    /// Up to ten `(k, corr)` pairs with the largest final `|corr|`.
    pub top_correlations: Vec<(usize, f64)>,
    /// Moment slots held; Θ(p), independent of `n`.
    pub state_slots: usize,
}

/// Selection context frozen at the last refresh point.
struct Frozen {
    index: Index,
    summary: Option<CorrSummary>,
    plug_in: f64,
    sigma_hat: f64,
    floored: bool,
}

impl Frozen {
    fn refresh(h: &MomentState, config: &ScreenConfig) -> Self {
        let index = h.maximizer(config.var_floor);
        let summary = h.summary(index.k, config.var_floor);
        let plug_in = match &summary {
            Some(s) => index.sign.as_f64() * s.corr,
            None => 0.0,
        };
        let second = gradient_second_moment(h, index.k, config.var_floor);
        let floored = second.is_none_or(|v| v < config.sigma_floor_sq);
        let sigma_hat = libm::sqrt(second.unwrap_or(0.0).max(config.sigma_floor_sq));
        Self {
            index,
            summary,
            plug_in,
            sigma_hat,
            floored,
        }
    }

    fn gradient(&self, o: &Observation) -> f64 {
        match &self.summary {
            Some(s) => s.gradient(self.index.sign, o.x[self.index.k], o.y),
            None => 0.0,
        }
    }
}

fn sigmoid_to_unit(z: f64) -> f64 {
    2.0 / (1.0 + libm::exp(-z)) - 1.0
}

struct Source<I, E>
where
    I: Iterator<Item = Result<Observation, E>>,
{
    inner: I,
    expected: usize,
    seen: usize,
    apply_sigmoid: bool,
    rows_outside_unit_range: u64,
}

impl<I, E> Source<I, E>
where
    I: Iterator<Item = Result<Observation, E>>,
{
    fn next_obs(&mut self, dim: Option<usize>) -> Result<Observation, EstError<E>> {
        let mut o = match self.inner.next() {
            Some(Ok(o)) => o,
            Some(Err(e)) => return Err(EstError::Source(e)),
            None => {
                return Err(Error::ShortStream {
                    expected: self.expected,
                    got: self.seen,
                }
                .into())
            }
        };
        if !o.is_finite() {
            return Err(Error::NonFinite.into());
        }
        if self.apply_sigmoid {
            for v in o.x.iter_mut() {
                *v = sigmoid_to_unit(*v);
            }
            o.y = sigmoid_to_unit(o.y);
        }
        if let Some(p) = dim {
            if o.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: o.dim(),
                }
                .into());
            }
        }
        if !o.in_unit_range() {
            self.rows_outside_unit_range += 1;
        }
        self.seen += 1;
        Ok(o)
    }
}

/// Runs the full screen over `n` observations drawn from `stream`.
///
/// The stream is consumed exactly `n` items deep; any further items are left
/// untouched. Peak memory is Θ(p); time is O(np).
pub fn est_psi<I, E>(
    stream: I,
    n: usize,
    config: &ScreenConfig,
) -> Result<ScreenResult, EstError<E>>
where
    I: IntoIterator<Item = Result<Observation, E>>,
{
    config.validate()?;
    if n < 4 {
        return Err(Error::SampleTooSmall(n).into());
    }
    let mut source = Source {
        inner: stream.into_iter(),
        expected: n,
        seen: 0,
        apply_sigmoid: config.apply_sigmoid,
        rows_outside_unit_range: 0,
    };

    let o1 = source.next_obs(None)?;
    let p = o1.dim();
    if p == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        }
        .into());
    }
    let o2 = source.next_obs(Some(p))?;
    let ell = match config.ell_override {
        Some(l) => l.clamp(2, n - 2),
        None => compute_ell_n(n, p, config.epsilon)?,
    };

    let mut h = MomentState::initialize(&o1, &o2).map_err(EstError::Core)?;
    while (h.count() as usize) < ell {
        let o = source.next_obs(Some(p))?;
        h.update(&o).map_err(EstError::Core)?;
    }

    let total_terms = n - ell;
    let chunks = config
        .chunk_count
        .unwrap_or(total_terms)
        .clamp(1, total_terms);
    let chunk_len = total_terms / chunks;

    let mut acc = Accumulator::new();
    let mut degenerate_gradient_terms = 0u64;
    let mut floored_sigma_terms = 0u64;
    let mut frozen = Frozen::refresh(&h, config);
    for t in 0..total_terms {
        // Boundaries at t = 0, chunk_len, ..., (chunks-1)·chunk_len; an
        // uneven division leaves the remainder in the final chunk.
        if t > 0 && t % chunk_len == 0 && t / chunk_len < chunks {
            frozen = Frozen::refresh(&h, config);
        }
        let o_next = source.next_obs(Some(p))?;
        let gradient = frozen.gradient(&o_next);
        acc.accumulate(frozen.plug_in, gradient, frozen.sigma_hat)
            .map_err(EstError::Core)?;
        if frozen.summary.is_none() {
            degenerate_gradient_terms += 1;
        }
        if frozen.floored {
            floored_sigma_terms += 1;
        }
        h.update(&o_next).map_err(EstError::Core)?;
    }

    let est = acc.finalize(config.alpha).map_err(EstError::Core)?;
    let diagnostics = Diagnostics {
        selected: frozen.index,
        degenerate_gradient_terms,
        floored_sigma_terms,
        rows_outside_unit_range: source.rows_outside_unit_range,
        top_correlations: top_correlations(&h, config.var_floor, 10),
        state_slots: h.state_slots(),
    };
    Ok(ScreenResult {
        psi_hat: est.psi_hat,
        sigma_bar: est.sigma_bar,
        ci_lower: est.ci_lower,
        ci_upper: est.ci_upper,
        alpha: est.alpha,
        n,
        ell_n: ell,
        reject_null: est.ci_lower > 0.0,
        diagnostics,
    })
}

/// [`est_psi`] over an infallible in-memory source.
pub fn est_psi_rows<I>(rows: I, n: usize, config: &ScreenConfig) -> Result<ScreenResult, Error>
where
    I: IntoIterator<Item = Observation>,
{
    est_psi(rows.into_iter().map(Ok::<_, core::convert::Infallible>), n, config).map_err(
        |e| match e {
            EstError::Core(e) => e,
            EstError::Source(never) => match never {},
        },
    )
}

fn top_correlations(h: &MomentState, var_floor: f64, limit: usize) -> Vec<(usize, f64)> {
    let (corr, _, _) = h.correlations(var_floor);
    let mut ranked: Vec<(usize, f64)> = corr.into_iter().enumerate().collect();
    ranked.sort_unstable_by(|a, b| {
        b.1.abs()
            .partial_cmp(&a.1.abs())
            .expect("correlations are finite")
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(limit);
    ranked
}
