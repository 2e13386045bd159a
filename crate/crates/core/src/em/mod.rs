//! Maximum likelihood fitting by the EM algorithm.
//!
//! * [`fit_ph`] and [`fit_iph`] fit univariate laws. For a transform family
//!   each iteration maps the data to the phase-type scale with `g⁻¹(·; β)`,
//!   performs one E- and M-step for `(π, T)` and then moves `β` uphill on the
//!   observed-data likelihood by fixed-step gradient ascent.
//! * [`fit_mph`] fits MPH* models: `(π, T)` from the row sums, rewards from
//!   the expected reward-earning time of every marginal.
//! * [`fit_biv_block`] and [`fit_biv_inhom`] fit the bivariate block model,
//!   optionally with transformed marginals, from exact pairs.
//!
//! Observations may be exact or interval-censored `(v, w]` with `w = ∞` for
//! right-censoring, and carry a positive weight.

mod ascent;
mod init;
mod multi;
mod stats;
mod uni;

use crate::error::{Error, Result};
use crate::iph::Transform;
use crate::mph::BivariateBlockModel;
use crate::ph::PhModel;

pub use multi::{
    estep_block, estep_rewards, fit_biv_block, fit_biv_inhom, fit_mph, fit_mph_two_stage, sum_observation,
};
pub use stats::{estep, estep_censored, estep_exact, log_likelihood, mstep, SufficientStats, UNDERFLOW};
pub use uni::{fit_iph, fit_ph};

/// Relative change of successive log-likelihoods below which a fit is
/// reported as converged.
pub const LOG_LIKELIHOOD_TOLERANCE: f64 = 1e-8;

/// Largest reward change below which the reward updates count as converged.
pub const REWARD_TOLERANCE: f64 = 1e-7;

/// Value of one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Exact(f64),
    /// Known to lie in `(lower, upper]`; `upper` may be infinite.
    Interval { lower: f64, upper: f64 },
}

/// A weighted observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    value: Value,
    weight: f64,
}

impl Observation {
    /// Exact value `y ≥ 0`. Zero is only meaningful for marginals with an
    /// atom; the univariate E-steps reject it.
    pub fn exact(y: f64) -> Result<Self> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::domain(y, "exact observations must be finite and non-negative"));
        }
        Ok(Observation {
            value: Value::Exact(y),
            weight: 1.0,
        })
    }

    /// Interval `(lower, upper]` with `0 ≤ lower < upper ≤ ∞`.
    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0) || !lower.is_finite() || !(upper > lower) {
            return Err(Error::InvalidParameter(format!(
                "censoring interval ({lower}, {upper}] must satisfy 0 <= lower < upper"
            )));
        }
        Ok(Observation {
            value: Value::Interval { lower, upper },
            weight: 1.0,
        })
    }

    pub fn right_censored(v: f64) -> Result<Self> {
        Self::interval(v, f64::INFINITY)
    }

    pub fn left_censored(w: f64) -> Result<Self> {
        Self::interval(0.0, w)
    }

    pub fn with_weight(self, weight: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!("weight {weight} must be positive")));
        }
        Ok(Observation { weight, ..self })
    }

    pub fn value(&self) -> Value {
        self.value
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.value, Value::Exact(_))
    }

    /// Exact value, or the interval midpoint, or the lower bound when the
    /// interval is unbounded. Used for starting values only.
    pub fn representative(&self) -> f64 {
        match self.value {
            Value::Exact(y) => y,
            Value::Interval { lower, upper } if upper.is_finite() => 0.5 * (lower + upper),
            Value::Interval { lower, .. } => lower,
        }
    }

    /// The observation on the phase-type scale of transform `t`.
    pub fn to_base(&self, t: &Transform) -> Result<Observation> {
        let value = match self.value {
            Value::Exact(x) => {
                if !t.in_support(x) {
                    return Err(Error::domain(x, format!("outside the support of the {} transform", t.family())));
                }
                Value::Exact(t.to_base(x)?)
            }
            Value::Interval { lower, upper } => {
                let (a, b) = (base_bound(t, lower)?, base_bound(t, upper)?);
                let (lower, upper) = if t.is_increasing() { (a, b) } else { (b, a) };
                if !(upper > lower) {
                    return Err(Error::domain(lower, "censoring interval collapses on the phase-type scale"));
                }
                Value::Interval { lower, upper }
            }
        };
        Ok(Observation { value, weight: self.weight })
    }
}

/// `g⁻¹` extended to the closure of the support and infinity.
fn base_bound(t: &Transform, x: f64) -> Result<f64> {
    if t.in_support(x) {
        return t.to_base(x);
    }
    Ok(match *t {
        Transform::Gev { mu, .. } => {
            if x < mu {
                f64::INFINITY
            } else {
                0.0
            }
        }
        _ if x == f64::INFINITY => f64::INFINITY,
        _ => 0.0,
    })
}

/// One row of a multivariate sample: one observation per coordinate.
pub type Row = Vec<Observation>;

/// Starting model of a fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    /// Random starting values drawn from the configured seed.
    #[default]
    Random,
    /// A given univariate model (also used for `(π, T)` of MPH* fits).
    Ph(PhModel),
    /// A given bivariate block model.
    Block(BivariateBlockModel),
}

/// Settings shared by all fits.
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Number of EM iterations.
    pub iterations: usize,
    /// Fixed step of the transform-parameter ascent; family default if `None`.
    pub step_length: Option<f64>,
    /// Gradient-norm threshold ending the ascent; family default if `None`.
    pub grad_tol: Option<f64>,
    /// Largest number of ascent steps per EM iteration.
    pub max_ascent_steps: usize,
    /// Whether transform parameters are estimated at all.
    pub fit_transform: bool,
    /// Truncation error of the matrix exponentials.
    pub eps: f64,
    pub seed: u64,
    pub init: Init,
    /// Starting transforms; data-driven defaults if `None`.
    pub initial_transforms: Option<Vec<Transform>>,
    /// Called after each E-step with the iteration and log-likelihood.
    pub progress: Option<fn(usize, f64)>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: 1000,
            step_length: None,
            grad_tol: None,
            max_ascent_steps: 100,
            fit_transform: true,
            eps: crate::linalg::DEFAULT_EPS,
            seed: 1,
            init: Init::Random,
            initial_transforms: None,
            progress: None,
        }
    }
}

impl FitConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        FitConfig {
            iterations,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        for (name, v) in [("step length", self.step_length), ("gradient tolerance", self.grad_tol)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("{name} {v} must be positive")));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<M> {
    pub model: M,
    /// Observed-data log-likelihood of the starting model and after every
    /// iteration. For MPH* fits this is the likelihood of the row sums.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// States removed because their expected occupation vanished, numbered
    /// as in the model of the iteration that removed them.
    pub pruned: Vec<usize>,
    /// Largest absolute reward change per iteration (MPH* fits only).
    pub reward_change: Vec<f64>,
    pub warnings: Vec<String>,
}

impl<M> FitResult<M> {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood.last().expect("trace holds the starting value")
    }
}

fn likelihood_converged(trace: &[f64]) -> bool {
    match trace {
        [.., a, b] => (b - a).abs() <= LOG_LIKELIHOOD_TOLERANCE * b.abs().max(1e-300),
        _ => false,
    }
}

fn total_weight(data: &[Observation]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    Ok(data.iter().map(Observation::weight).sum())
}
