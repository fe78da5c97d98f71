//! Monte Carlo power study harness.
//!
//! Designs are equicorrelated Gaussians: all marginals N(0,1) and every
//! pair of predictors correlated at `rho`. Rows are drawn by the low-rank
//! construction `x = sqrt(rho)·w·1 + sqrt(1-rho)·z` (one shared factor `w`
//! plus independent noise), so a row costs O(p) and no covariance matrix is
//! ever formed. Outcomes follow one of eight models with either
//! homoscedastic noise (`.IE`, a fresh standard normal) or heteroscedastic
//! noise (`.DE`, `Σ x_k τ_k / sqrt(p)` with fresh τ's).
//!
//! Each replication owns a private ChaCha12 stream derived from the master
//! seed and the replication number, so studies are reproducible, replications
//! are independent, and both test methods see identical data for a given
//! data-generating scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use maxcorr_core::special::student_t_two_sided_p;
use maxcorr_core::{est_psi, EstError, Observation, ScreenConfig};

/// Outcome models from the power study. `IE` models add an independent
/// standard-normal error; `DE` models add the predictor-dependent error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "N.IE")]
    NIe,
    #[serde(rename = "A1.IE")]
    A1Ie,
    #[serde(rename = "A2.IE")]
    A2Ie,
    #[serde(rename = "N.DE")]
    NDe,
    #[serde(rename = "A1.DE")]
    A1De,
    #[serde(rename = "A2.DE")]
    A2De,
    #[serde(rename = "A3.IE")]
    A3Ie,
    #[serde(rename = "A4.IE")]
    A4Ie,
}

impl Model {
    pub const ALL: [Model; 8] = [
        Model::NIe,
        Model::A1Ie,
        Model::A2Ie,
        Model::NDe,
        Model::A1De,
        Model::A2De,
        Model::A3Ie,
        Model::A4Ie,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Model::NIe => "N.IE",
            Model::A1Ie => "A1.IE",
            Model::A2Ie => "A2.IE",
            Model::NDe => "N.DE",
            Model::A1De => "A1.DE",
            Model::A2De => "A2.DE",
            Model::A3Ie => "A3.IE",
            Model::A4Ie => "A4.IE",
        }
    }

    pub fn heteroscedastic(self) -> bool {
        matches!(self, Model::NDe | Model::A1De | Model::A2De)
    }

    /// Smallest design dimension the signal coefficients fit in.
    pub fn min_p(self) -> usize {
        match self {
            Model::NIe | Model::NDe => 1,
            Model::A1Ie | Model::A1De | Model::A3Ie => 1,
            Model::A2Ie | Model::A2De | Model::A4Ie => 10,
        }
    }

    /// Deterministic part of the outcome (test hook: no noise).
    pub fn signal(self, x: &[f64]) -> f64 {
        match self {
            Model::NIe | Model::NDe => 0.0,
            Model::A1Ie | Model::A1De => x[0] / 5.0,
            Model::A3Ie => x[0] / 15.0,
            Model::A2Ie | Model::A2De => {
                0.15 * x[..5].iter().sum::<f64>() - 0.1 * x[5..10].iter().sum::<f64>()
            }
            Model::A4Ie => {
                0.03 * x[..5].iter().sum::<f64>() - 0.015 * x[5..10].iter().sum::<f64>()
            }
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Model {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        Model::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownModel(s.to_string()))
    }
}

/// Which test decides a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "stabilized_one_step")]
    StabilizedOneStep,
    #[serde(rename = "bonferroni_t")]
    BonferroniT,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::StabilizedOneStep => "stabilized_one_step",
            Method::BonferroniT => "bonferroni_t",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            _ if s.eq_ignore_ascii_case("stabilized_one_step") => Ok(Method::StabilizedOneStep),
            _ if s.eq_ignore_ascii_case("bonferroni_t") => Ok(Method::BonferroniT),
            _ => Err(SimError::UnknownMethod(s.to_string())),
        }
    }
}

/// One cell of the study grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub model: Model,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub reps: u32,
    /// Level of the one-sided test: the stabilized method rejects when the
    /// lower bound of the `1 - 2·alpha` interval is positive; Bonferroni
    /// rejects when any per-predictor p-value is at most `alpha / p`.
    pub alpha: f64,
    pub seed: u64,
    pub method: Method,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(SimError::InvalidRho(self.rho));
        }
        if self.reps < 1 {
            return Err(SimError::InvalidReps);
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(SimError::InvalidAlpha(self.alpha));
        }
        if self.p < self.model.min_p() {
            return Err(SimError::DesignTooNarrow {
                model: self.model,
                p: self.p,
                needs: self.model.min_p(),
            });
        }
        if self.n < 4 {
            return Err(SimError::SampleTooSmall(self.n));
        }
        Ok(())
    }

    /// Stream id of the data layer: shared by both methods and any alpha so
    /// comparisons run on identical draws. FNV-1a over the data-generating
    /// parameters.
    fn data_stream(&self, rep: u32) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.model.label().as_bytes());
        eat(&(self.n as u64).to_le_bytes());
        eat(&(self.p as u64).to_le_bytes());
        eat(&self.rho.to_bits().to_le_bytes());
        h.wrapping_add(rep as u64)
    }
}

/// Tallied rejections for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub spec: ScenarioSpec,
    pub rejections: u32,
    pub power: f64,
    pub mc_stderr: f64,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("unknown method {0:?} (expected stabilized_one_step or bonferroni_t)")]
    UnknownMethod(String),
    #[error("rho must lie in [0, 1), got {0}")]
    InvalidRho(f64),
    #[error("reps must be at least 1")]
    InvalidReps,
    #[error("alpha must lie in (0, 0.5), got {0}")]
    InvalidAlpha(f64),
    #[error("model {model} needs p >= {needs}, got {p}")]
    DesignTooNarrow { model: Model, p: usize, needs: usize },
    #[error("need at least 4 observations per replication, got {0}")]
    SampleTooSmall(usize),
    #[error("bonferroni t-test needs at least 3 rows, got {0}")]
    TooFewRowsForT(usize),
    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<SimError>,
    },
    #[error(transparent)]
    Screen(#[from] maxcorr_core::Error),
}

/// One design row of the equicorrelated Gaussian: `sqrt(rho)·w + sqrt(1-rho)·z_k`.
pub fn gen_design_row<R: Rng>(p: usize, rho: f64, rng: &mut R) -> Result<Vec<f64>, SimError> {
    if !(0.0..1.0).contains(&rho) {
        return Err(SimError::InvalidRho(rho));
    }
    let shared = rho.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let idio = (1.0 - rho).sqrt();
    Ok((0..p)
        .map(|_| shared + idio * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Outcome under `model` at the design point `x`: signal plus fresh noise.
pub fn gen_outcome<R: Rng>(model: Model, x: &[f64], rng: &mut R) -> Result<f64, SimError> {
    if x.len() < model.min_p() {
        return Err(SimError::DesignTooNarrow {
            model,
            p: x.len(),
            needs: model.min_p(),
        });
    }
    let noise = if model.heteroscedastic() {
        let p = x.len();
        x.iter()
            .map(|&xk| xk * rng.sample::<f64, _>(StandardNormal))
            .sum::<f64>()
            / (p as f64).sqrt()
    } else {
        rng.sample::<f64, _>(StandardNormal)
    };
    Ok(model.signal(x) + noise)
}

/// One full observation; the row is drawn first, then the outcome noise.
pub fn gen_observation<R: Rng>(
    model: Model,
    p: usize,
    rho: f64,
    rng: &mut R,
) -> Result<Observation, SimError> {
    let x = gen_design_row(p, rho, rng)?;
    let y = gen_outcome(model, &x, rng)?;
    Ok(Observation::new(x, y))
}

/// Bonferroni-corrected per-predictor t-tests: rejects when some sample
/// correlation's two-sided p-value is at most `alpha / p`.
pub fn bonferroni_t_test(rows: &[Observation], alpha: f64) -> Result<bool, SimError> {
    if rows.len() < 3 {
        return Err(SimError::TooFewRowsForT(rows.len()));
    }
    let mut stats = ColumnTestStats::new(rows[0].dim());
    for o in rows {
        stats.add_row(o);
    }
    Ok(stats.min_p_value() <= alpha / rows[0].dim() as f64)
}

fn replication_rejects(spec: &ScenarioSpec, rep: u32) -> Result<bool, SimError> {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.data_stream(rep));
    match spec.method {
        Method::StabilizedOneStep => {
            // Rows are generated lazily and consumed one at a time, keeping
            // the replication at O(p) memory even for very wide designs.
            let mut left = spec.n;
            let stream = std::iter::from_fn(|| {
                if left == 0 {
                    return None;
                }
                left -= 1;
                Some(gen_observation(spec.model, spec.p, spec.rho, &mut rng))
            });
            let config = ScreenConfig {
                alpha: 2.0 * spec.alpha,
                ..ScreenConfig::default()
            };
            let res = est_psi(stream, spec.n, &config).map_err(|e| match e {
                EstError::Core(c) => SimError::Screen(c),
                EstError::Source(s) => s,
            })?;
            Ok(res.ci_lower > 0.0)
        }
        Method::BonferroniT => {
            let mut stats = ColumnTestStats::new(spec.p);
            for _ in 0..spec.n {
                let o = gen_observation(spec.model, spec.p, spec.rho, &mut rng)?;
                stats.add_row(&o);
            }
            Ok(stats.min_p_value() <= spec.alpha / spec.p as f64)
        }
    }
}

/// Streaming per-column correlation t-test sums; O(p) memory however long
/// the stream is.
#[derive(Debug, Clone)]
pub struct ColumnTestStats {
    n: u64,
    sum_y: f64,
    sum_yy: f64,
    cols: Vec<ColSums>,
}

#[derive(Debug, Clone, Copy, Default)]
struct ColSums {
    x: f64,
    xx: f64,
    xy: f64,
}

impl ColumnTestStats {
    pub fn new(p: usize) -> Self {
        Self {
            n: 0,
            sum_y: 0.0,
            sum_yy: 0.0,
            cols: vec![ColSums::default(); p],
        }
    }

    pub fn add_row(&mut self, o: &Observation) {
        debug_assert_eq!(o.dim(), self.cols.len());
        self.n += 1;
        self.sum_y += o.y;
        self.sum_yy += o.y * o.y;
        for (col, &x) in self.cols.iter_mut().zip(&o.x) {
            col.x += x;
            col.xx += x * x;
            col.xy += x * o.y;
        }
    }

    pub fn rows(&self) -> u64 {
        self.n
    }

    /// Two-sided p-value of the correlation t-test for column `k`; 1 for a
    /// degenerate column, 0 for a numerically perfect correlation.
    pub fn p_value(&self, k: usize) -> f64 {
        if self.n < 3 {
            return 1.0;
        }
        let n = self.n as f64;
        let col = &self.cols[k];
        let sxx = n * col.xx - col.x * col.x;
        let syy = n * self.sum_yy - self.sum_y * self.sum_y;
        let sxy = n * col.xy - col.x * self.sum_y;
        if sxx <= 0.0 || syy <= 0.0 {
            return 1.0;
        }
        let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
        let one_minus_r2 = 1.0 - r * r;
        if one_minus_r2 <= f64::EPSILON {
            return 0.0;
        }
        let t = r * ((n - 2.0) / one_minus_r2).sqrt();
        student_t_two_sided_p(t, n - 2.0)
    }

    pub fn min_p_value(&self) -> f64 {
        (0..self.cols.len())
            .map(|k| self.p_value(k))
            .fold(1.0, f64::min)
    }
}

/// Runs every scenario, one `PowerRow` per input spec, in input order.
/// Replications are independent and run in parallel; the tally is a sum, so
/// the output is reproducible regardless of scheduling.
pub fn run_power_study(specs: &[ScenarioSpec]) -> Result<Vec<PowerRow>, SimError> {
    specs.iter().map(run_scenario).collect()
}

fn run_scenario(spec: &ScenarioSpec) -> Result<PowerRow, SimError> {
    let with_context = |source: SimError| SimError::Scenario {
        scenario: format!(
            "{} n={} p={} rho={} method={}",
            spec.model, spec.n, spec.p, spec.rho, spec.method
        ),
        source: Box::new(source),
    };
    spec.validate().map_err(with_context)?;
    let rejections = (0..spec.reps)
        .into_par_iter()
        .map(|rep| replication_rejects(spec, rep).map(u32::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
        .map_err(with_context)?;
    let power = rejections as f64 / spec.reps as f64;
    let mc_stderr = (power * (1.0 - power) / spec.reps as f64).sqrt();
    Ok(PowerRow {
        spec: spec.clone(),
        rejections,
        power,
        mc_stderr,
    })
}
