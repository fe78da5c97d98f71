//! Canonical gradient of the signed-correlation parameter, its second
//! moment in closed form, and the exact second-order remainder of the
//! parameter's linear expansion.
//!
//! For `d = (k, sign)` the parameter is `Ψ^d(P) = sign · Corr_P(X_k, Y)` and
//! its canonical gradient at an observation `(x, y)` is
//!
//! ```text
//! sign · [ (x-μx)(y-μy)/(sx·sy) - ρ/2 · ((x-μx)²/sx² + (y-μy)²/sy²) ]
//! ```
//!
//! with `μ`, `s`, `ρ` the mean, standard deviation and correlation under
//! `P`. The gradient has mean zero under `P`, so its variance equals its
//! second moment, which expands into moments `E[X^r Y^s]`, `r + s <= 4` —
//! exactly what [`MomentState`] tracks. That makes the per-step variance
//! estimate O(1) once the moments are known.

use crate::moments::{Index, MomentState, Observation, Sign};
use crate::Error;

/// Five-number summary of one predictor/outcome pair under a distribution:
/// means, standard deviations, and their correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrSummary {
    pub mean_x: f64,
    pub mean_y: f64,
    pub sd_x: f64,
    pub sd_y: f64,
    pub corr: f64,
}

impl CorrSummary {
    /// Evaluates the canonical gradient at the point `(x, y)`.
    pub fn gradient(&self, sign: Sign, x: f64, y: f64) -> f64 {
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        let ux = dx / self.sd_x;
        let uy = dy / self.sd_y;
        sign.as_f64() * (ux * uy - 0.5 * self.corr * (ux * ux + uy * uy))
    }
}

/// Canonical gradient `D^d(P_j)` evaluated at observation `o`, where `P_j`
/// is the empirical distribution held in `h`.
///
/// Returns 0 when the variance of `X_k` or `Y` under `h` is at or below
/// `var_floor`; callers can detect that case via [`MomentState::summary`].
pub fn calc_d(h: &MomentState, d: Index, o: &Observation, var_floor: f64) -> f64 {
    match h.summary(d.k, var_floor) {
        Some(s) => s.gradient(d.sign, o.x[d.k], o.y),
        None => 0.0,
    }
}

/// Second moment `P_j [D^d(P_j)]²` of the canonical gradient under the
/// empirical distribution in `h`, from moments alone (no data pass).
///
/// Expanding the squared gradient and pushing the expectation through turns
/// every term into a polynomial in the raw moments `E[X^r Y^s]`; the four
/// sums below are the binomial expansions of the central moments
/// `E[(X-μx)²(Y-μy)²]`, `E[(X-μx)⁴] / E[(Y-μy)⁴]`, `E[(X-μx)³(Y-μy)]` and
/// `E[(X-μx)(Y-μy)³]`. The result does not depend on the sign.
pub fn gradient_second_moment(h: &MomentState, k: usize, var_floor: f64) -> Option<f64> {
    let s = h.summary(k, var_floor)?;
    let rho = s.corr;
    let sx2 = s.sd_x * s.sd_x;
    let sy2 = s.sd_y * s.sd_y;

    let mut mx_pow = [1.0; 5];
    let mut my_pow = [1.0; 5];
    for i in 1..5 {
        mx_pow[i] = mx_pow[i - 1] * s.mean_x;
        my_pow[i] = my_pow[i - 1] * s.mean_y;
    }
    const BINOM2: [f64; 3] = [1.0, 2.0, 1.0];
    const BINOM3: [f64; 4] = [1.0, 3.0, 3.0, 1.0];
    const BINOM4: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
    let parity = |e: u32| if e.is_multiple_of(2) { 1.0 } else { -1.0 };

    // E[(X-μx)²(Y-μy)²]
    let mut c22 = 0.0;
    for r in 0..=2u32 {
        for s_ in 0..=2u32 {
            c22 += parity(r + s_)
                * BINOM2[r as usize]
                * BINOM2[s_ as usize]
                * h.moment(k, r, s_)
                * mx_pow[(2 - r) as usize]
                * my_pow[(2 - s_) as usize];
        }
    }
    // E[(X-μx)⁴] and E[(Y-μy)⁴]
    let mut c40 = 0.0;
    let mut c04 = 0.0;
    for r in 0..=4u32 {
        let b = parity(r) * BINOM4[r as usize];
        c40 += b * h.moment(k, r, 0) * mx_pow[(4 - r) as usize];
        c04 += b * h.moment(k, 0, r) * my_pow[(4 - r) as usize];
    }
    // E[(X-μx)³(Y-μy)]
    let mut c31 = 0.0;
    for r in 0..=3u32 {
        for s_ in 0..=1u32 {
            c31 += parity(r + s_)
                * BINOM3[r as usize]
                * h.moment(k, r, s_)
                * mx_pow[(3 - r) as usize]
                * my_pow[(1 - s_) as usize];
        }
    }
    // E[(X-μx)(Y-μy)³]
    let mut c13 = 0.0;
    for r in 0..=1u32 {
        for s_ in 0..=3u32 {
            c13 += parity(r + s_)
                * BINOM3[s_ as usize]
                * h.moment(k, r, s_)
                * mx_pow[(1 - r) as usize]
                * my_pow[(3 - s_) as usize];
        }
    }

    Some(
        (2.0 + rho * rho) / (2.0 * sx2 * sy2) * c22
            + rho * rho / 4.0 * (c40 / (sx2 * sx2) + c04 / (sy2 * sy2))
            - rho / (sx2 * s.sd_x * s.sd_y) * c31
            - rho / (s.sd_x * sy2 * s.sd_y) * c13,
    )
}

/// Per-step scale estimate `σ̂ = sqrt(max{P_j D², sigma_floor_sq})`.
///
/// The gradient is mean zero under `P_j`, so its second moment is its
/// variance. Degenerate states fall back to the floor.
pub fn calc_sig_hat(h: &MomentState, d: Index, sigma_floor_sq: f64, var_floor: f64) -> f64 {
    let second = gradient_second_moment(h, d.k, var_floor).unwrap_or(0.0);
    libm::sqrt(second.max(sigma_floor_sq))
}

/// Exact second-order remainder `Rem^d(P)` of the expansion
/// `Ψ^d(P) - Ψ^d(P0) = -E_{P0}[D^d(P)] + Rem^d(P)`, as a closed form in the
/// two five-number summaries.
///
/// Every term is a product of differences between `P` and `P0` quantities,
/// which is what makes the remainder second-order small when the summaries
/// are close.
pub fn remainder(p: &CorrSummary, p0: &CorrSummary, sign: Sign) -> Result<f64, Error> {
    if !(p.sd_x > 0.0 && p.sd_y > 0.0) {
        return Err(Error::ZeroStdDev);
    }
    let sxy = p.sd_x * p.sd_y;
    let t1 = (sxy - p0.sd_x * p0.sd_y) * (p.corr - p0.corr) / sxy;
    let dmx = p.mean_x - p0.mean_x;
    let dmy = p.mean_y - p0.mean_y;
    let t2 = dmx * dmy / sxy;
    let t3 = -0.5
        * p.corr
        * (dmx * dmx / (p.sd_x * p.sd_x) + dmy * dmy / (p.sd_y * p.sd_y));
    let cross = p.sd_x * p0.sd_y - p0.sd_x * p.sd_y;
    let t4 = -0.5 * p.corr * cross * cross / (sxy * sxy);
    Ok(sign.as_f64() * (t1 + t2 + t3 + t4))
}
