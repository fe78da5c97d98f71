//! The O(p) sufficient state: all empirical moments `E[X_k^r Y^s]` with
//! `r + s <= 4`, held per predictor, plus the shared moments of `Y`.
//!
//! Everything the estimator needs at a step — correlations, the selected
//! index, the canonical gradient and its variance — is a closed-form
//! function of these moments, so absorbing an observation is O(p) and the
//! state never grows with the stream.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::gradient::CorrSummary;

/// One data row: a predictor vector and the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    /// Whether every coordinate (and the outcome) lies in `[-1, 1]`.
    pub fn in_unit_range(&self) -> bool {
        self.y.abs() <= 1.0 && self.x.iter().all(|v| v.abs() <= 1.0)
    }
}

/// Sign attached to a selected predictor so that the signed correlation
/// `sign · Corr(X_k, Y)` is the maximal *absolute* correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(value: f64) -> Self {
        if value < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// A selected parameter index: predictor `k` (0-based) and a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Index {
    pub k: usize,
    pub sign: Sign,
}

// Per-predictor slot layout; the shared Y moments live separately.
const SLOTS_PER_PREDICTOR: usize = 10;
const X1: usize = 0; // E[X]
const X2: usize = 1; // E[X^2]
const X3: usize = 2; // E[X^3]
const X4: usize = 3; // E[X^4]
const X1Y1: usize = 4; // E[X Y]
const X1Y2: usize = 5; // E[X Y^2]
const X1Y3: usize = 6; // E[X Y^3]
const X2Y1: usize = 7; // E[X^2 Y]
const X2Y2: usize = 8; // E[X^2 Y^2]
const X3Y1: usize = 9; // E[X^3 Y]

/// Streaming moment state over `j` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    count: u64,
    p: usize,
    /// `SLOTS_PER_PREDICTOR` contiguous moments per predictor.
    xk: Vec<f64>,
    /// `E[Y], E[Y^2], E[Y^3], E[Y^4]`.
    y: [f64; 4],
}

impl MomentState {
    /// Builds the state from the first two observations; every moment is the
    /// two-point average of the corresponding monomial.
    pub fn initialize(o1: &Observation, o2: &Observation) -> Result<Self, Error> {
        if o1.dim() != o2.dim() {
            return Err(Error::DimensionMismatch {
                expected: o1.dim(),
                got: o2.dim(),
            });
        }
        Self::from_rows([o1, o2])
    }

    /// Batch construction: every moment is the direct average of the
    /// monomial over the rows. Equivalent to streaming the rows through
    /// [`MomentState::update`], but computed by plain summation.
    pub fn from_rows<'a, I>(rows: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = &'a Observation>,
    {
        let mut it = rows.into_iter();
        let first = it.next().ok_or(Error::SampleTooSmall(0))?;
        if !first.is_finite() {
            return Err(Error::NonFinite);
        }
        let p = first.dim();
        let mut xk = vec![0.0; p * SLOTS_PER_PREDICTOR];
        let mut y = [0.0; 4];
        let mut count = 0u64;
        let mut add = |o: &Observation| -> Result<(), Error> {
            if o.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: o.dim(),
                });
            }
            if !o.is_finite() {
                return Err(Error::NonFinite);
            }
            let (y1, y2, y3) = (o.y, o.y * o.y, o.y * o.y * o.y);
            y[0] += y1;
            y[1] += y2;
            y[2] += y3;
            y[3] += y2 * y2;
            for (k, &x) in o.x.iter().enumerate() {
                let m = &mut xk[k * SLOTS_PER_PREDICTOR..(k + 1) * SLOTS_PER_PREDICTOR];
                let (x2, x3) = (x * x, x * x * x);
                m[X1] += x;
                m[X2] += x2;
                m[X3] += x3;
                m[X4] += x2 * x2;
                m[X1Y1] += x * y1;
                m[X1Y2] += x * y2;
                m[X1Y3] += x * y3;
                m[X2Y1] += x2 * y1;
                m[X2Y2] += x2 * y2;
                m[X3Y1] += x3 * y1;
            }
            count += 1;
            Ok(())
        };
        add(first)?;
        for o in it {
            add(o)?;
        }
        let inv = 1.0 / count as f64;
        for m in xk.iter_mut() {
            *m *= inv;
        }
        for m in y.iter_mut() {
            *m *= inv;
        }
        Ok(Self { count, p, xk, y })
    }

    /// Absorbs one observation with the numerically stable mean recursion
    /// `m += (f(o) - m) / (j + 1)` applied to every tracked monomial.
    pub fn update(&mut self, o: &Observation) -> Result<(), Error> {
        if o.dim() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: o.dim(),
            });
        }
        if !o.is_finite() {
            return Err(Error::NonFinite);
        }
        let inv = 1.0 / (self.count + 1) as f64;
        let (y1, y2, y3) = (o.y, o.y * o.y, o.y * o.y * o.y);
        let y4 = y2 * y2;
        for (k, &x) in o.x.iter().enumerate() {
            let m = &mut self.xk[k * SLOTS_PER_PREDICTOR..(k + 1) * SLOTS_PER_PREDICTOR];
            let (x2, x3) = (x * x, x * x * x);
            let x4 = x2 * x2;
            m[X1] += (x - m[X1]) * inv;
            m[X2] += (x2 - m[X2]) * inv;
            m[X3] += (x3 - m[X3]) * inv;
            m[X4] += (x4 - m[X4]) * inv;
            m[X1Y1] += (x * y1 - m[X1Y1]) * inv;
            m[X1Y2] += (x * y2 - m[X1Y2]) * inv;
            m[X1Y3] += (x * y3 - m[X1Y3]) * inv;
            m[X2Y1] += (x2 * y1 - m[X2Y1]) * inv;
            m[X2Y2] += (x2 * y2 - m[X2Y2]) * inv;
            m[X3Y1] += (x3 * y1 - m[X3Y1]) * inv;
        }
        self.y[0] += (y1 - self.y[0]) * inv;
        self.y[1] += (y2 - self.y[1]) * inv;
        self.y[2] += (y3 - self.y[2]) * inv;
        self.y[3] += (y4 - self.y[3]) * inv;
        self.count += 1;
        Ok(())
    }

    /// Number of observations absorbed.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Number of predictors.
    pub fn dim(&self) -> usize {
        self.p
    }

    /// Number of f64 moment slots held; independent of the stream length.
    pub fn state_slots(&self) -> usize {
        self.xk.len() + self.y.len()
    }

    /// Raw moment `E[X_k^r Y^s]` for `r + s <= 4` (with `E[X^0 Y^0] = 1`).
    ///
    /// # Panics
    /// Panics if `(r, s)` is outside the tracked range or `k >= p`.
    pub fn moment(&self, k: usize, r: u32, s: u32) -> f64 {
        let slot = match (r, s) {
            (0, 0) => return 1.0,
            (0, s) if s <= 4 => return self.y[(s - 1) as usize],
            (1, 0) => X1,
            (2, 0) => X2,
            (3, 0) => X3,
            (4, 0) => X4,
            (1, 1) => X1Y1,
            (1, 2) => X1Y2,
            (1, 3) => X1Y3,
            (2, 1) => X2Y1,
            (2, 2) => X2Y2,
            (3, 1) => X3Y1,
            _ => panic!("moment ({r},{s}) not tracked"),
        };
        self.xk[k * SLOTS_PER_PREDICTOR + slot]
    }

    pub fn mean_x(&self, k: usize) -> f64 {
        self.xk[k * SLOTS_PER_PREDICTOR + X1]
    }

    pub fn var_x(&self, k: usize) -> f64 {
        let m = &self.xk[k * SLOTS_PER_PREDICTOR..(k + 1) * SLOTS_PER_PREDICTOR];
        m[X2] - m[X1] * m[X1]
    }

    pub fn mean_y(&self) -> f64 {
        self.y[0]
    }

    pub fn var_y(&self) -> f64 {
        self.y[1] - self.y[0] * self.y[0]
    }

    pub fn cov(&self, k: usize) -> f64 {
        let m = &self.xk[k * SLOTS_PER_PREDICTOR..(k + 1) * SLOTS_PER_PREDICTOR];
        m[X1Y1] - m[X1] * self.y[0]
    }

    /// Empirical correlation of `X_k` and `Y`, defined as 0 whenever either
    /// variance is at or below `var_floor`.
    pub fn corr(&self, k: usize, var_floor: f64) -> f64 {
        let vx = self.var_x(k);
        let vy = self.var_y();
        if vx > var_floor && vy > var_floor {
            self.cov(k) / libm::sqrt(vx * vy)
        } else {
            0.0
        }
    }

    /// All per-predictor correlations and variances: `(corr, var_x, var_y)`.
    pub fn correlations(&self, var_floor: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let mut corr = Vec::with_capacity(self.p);
        let mut var_x = Vec::with_capacity(self.p);
        for k in 0..self.p {
            corr.push(self.corr(k, var_floor));
            var_x.push(self.var_x(k));
        }
        (corr, var_x, self.var_y())
    }

    /// The index maximizing the signed correlation, i.e. the argmax of
    /// `|corr_k|`. Ties are broken toward the smallest `k`; a zero
    /// correlation selects `Plus`.
    pub fn maximizer(&self, var_floor: f64) -> Index {
        let mut best_k = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        let mut best_val = 0.0;
        for k in 0..self.p {
            let c = self.corr(k, var_floor);
            if c.abs() > best_abs {
                best_abs = c.abs();
                best_val = c;
                best_k = k;
            }
        }
        Index {
            k: best_k,
            sign: Sign::of(best_val),
        }
    }

    /// Five-number summary for predictor `k`, or `None` when either variance
    /// is at or below `var_floor`.
    pub fn summary(&self, k: usize, var_floor: f64) -> Option<CorrSummary> {
        let vx = self.var_x(k);
        let vy = self.var_y();
        if vx > var_floor && vy > var_floor {
            let sd_x = libm::sqrt(vx);
            let sd_y = libm::sqrt(vy);
            Some(CorrSummary {
                mean_x: self.mean_x(k),
                mean_y: self.mean_y(),
                sd_x,
                sd_y,
                corr: self.cov(k) / (sd_x * sd_y),
            })
        } else {
            None
        }
    }
}
