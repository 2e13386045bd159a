//! Inhomogeneous phase-type distributions `X = g(Y)` with `Y ~ PH(π, T)`.
//!
//! A [`Transform`] carries `g`, its inverse `g⁻¹` (called `to_base` here) and
//! the intensity `λ = |d g⁻¹ / dx|`, so that
//!
//! ```text
//! f_X(x) = λ(x) π exp(T g⁻¹(x)) t,    S_X(x) = π exp(T g⁻¹(x)) e.
//! ```
//!
//! The matrix-GEV map is decreasing: `g⁻¹(x) = (1 + ξ(x-μ)/σ)^{-1/ξ}`, so its
//! survival function is `1 - π exp(T g⁻¹(x)) e`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{matrix_function, Matrix, MatrixFunction, SubIntensity};
use crate::ph::{dot, PhModel};

/// Below this `|ξ|` the GEV transform uses its Gumbel limit.
pub const GUMBEL_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Identity,
    Pareto,
    Weibull,
    Gompertz,
    Gev,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Identity,
        Family::Pareto,
        Family::Weibull,
        Family::Gompertz,
        Family::Gev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::Pareto => "pareto",
            Family::Weibull => "weibull",
            Family::Gompertz => "gompertz",
            Family::Gev => "gev",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Identity => &[],
            Family::Pareto | Family::Weibull | Family::Gompertz => &["beta"],
            Family::Gev => &["mu", "sigma", "xi"],
        }
    }

    /// Default fixed step of the parameter gradient ascent.
    pub fn default_step_length(self) -> f64 {
        match self {
            Family::Gompertz => 1e-8,
            _ => 1e-5,
        }
    }

    /// Default gradient-norm threshold ending the parameter ascent.
    pub fn default_grad_tol(self) -> f64 {
        match self {
            Family::Gev => 0.1,
            _ => 1e-3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Time transform of a named family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    /// `g(y) = β(e^y - 1)`.
    Pareto { beta: f64 },
    /// `g(y) = y^{1/β}`.
    Weibull { beta: f64 },
    /// `g(y) = log(βy + 1)/β`.
    Gompertz { beta: f64 },
    /// `g(y) = μ + σ(y^{-ξ} - 1)/ξ`, or `μ - σ log y` when `ξ = 0`.
    Gev { mu: f64, sigma: f64, xi: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be positive and finite")))
    }
}

impl Transform {
    pub fn from_params(family: Family, params: &[f64]) -> Result<Transform> {
        if params.len() != family.param_names().len() {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {} parameters, got {}",
                family.param_names().len(),
                params.len()
            )));
        }
        let t = match family {
            Family::Identity => Transform::Identity,
            Family::Pareto => Transform::Pareto { beta: params[0] },
            Family::Weibull => Transform::Weibull { beta: params[0] },
            Family::Gompertz => Transform::Gompertz { beta: params[0] },
            Family::Gev => Transform::Gev {
                mu: params[0],
                sigma: params[1],
                xi: params[2],
            },
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Transform::Identity => Ok(()),
            Transform::Pareto { beta } | Transform::Weibull { beta } | Transform::Gompertz { beta } => {
                positive("beta", beta)
            }
            Transform::Gev { mu, sigma, xi } => {
                positive("sigma", sigma)?;
                if mu.is_finite() && xi.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("GEV location and shape must be finite".into()))
                }
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Transform::Identity => Family::Identity,
            Transform::Pareto { .. } => Family::Pareto,
            Transform::Weibull { .. } => Family::Weibull,
            Transform::Gompertz { .. } => Family::Gompertz,
            Transform::Gev { .. } => Family::Gev,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Transform::Identity => vec![],
            Transform::Pareto { beta } | Transform::Weibull { beta } | Transform::Gompertz { beta } => {
                vec![beta]
            }
            Transform::Gev { mu, sigma, xi } => vec![mu, sigma, xi],
        }
    }

    /// Whether `g` is increasing. Only the GEV map is decreasing.
    pub fn is_increasing(&self) -> bool {
        !matches!(self, Transform::Gev { .. })
    }

    /// Whether `x` lies in the open support of `g(Y)`.
    pub fn in_support(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            Transform::Gev { mu, sigma, xi } => 1.0 + xi * (x - mu) / sigma > 0.0,
            _ => x > 0.0,
        }
    }

    /// `g⁻¹(x)`.
    pub fn to_base(&self, x: f64) -> Result<f64> {
        match *self {
            Transform::Identity if x >= 0.0 => Ok(x),
            Transform::Pareto { beta } if x >= 0.0 => Ok((x / beta).ln_1p()),
            Transform::Weibull { beta } if x >= 0.0 => Ok(x.powf(beta)),
            Transform::Gompertz { beta } if x >= 0.0 => Ok((beta * x).exp_m1() / beta),
            Transform::Gev { .. } if self.in_support(x) => Ok(self.gev_log_base(x).exp()),
            _ => Err(Error::domain(x, format!("outside the support of the {} transform", self.family()))),
        }
    }

    /// `log g⁻¹(x)` for the GEV map.
    fn gev_log_base(&self, x: f64) -> f64 {
        match *self {
            Transform::Gev { mu, sigma, xi } => {
                let z = (x - mu) / sigma;
                if xi.abs() < GUMBEL_THRESHOLD {
                    -z
                } else {
                    -(xi * z).ln_1p() / xi
                }
            }
            _ => unreachable!(),
        }
    }

    /// `g(y)` for `y ≥ 0`.
    pub fn from_base(&self, y: f64) -> f64 {
        match *self {
            Transform::Identity => y,
            Transform::Pareto { beta } => beta * y.exp_m1(),
            Transform::Weibull { beta } => y.powf(1.0 / beta),
            Transform::Gompertz { beta } => (beta * y).ln_1p() / beta,
            Transform::Gev { mu, sigma, xi } => {
                if xi.abs() < GUMBEL_THRESHOLD {
                    mu - sigma * y.ln()
                } else {
                    mu + sigma * (-xi * y.ln()).exp_m1() / xi
                }
            }
        }
    }

    /// `log λ(x)` with `λ = |d g⁻¹/dx|`, for `x` in the support.
    pub fn log_intensity(&self, x: f64) -> Result<f64> {
        if !self.in_support(x) {
            return Err(Error::domain(x, format!("outside the support of the {} transform", self.family())));
        }
        Ok(match *self {
            Transform::Identity => 0.0,
            Transform::Pareto { beta } => -(x + beta).ln(),
            Transform::Weibull { beta } => beta.ln() + (beta - 1.0) * x.ln(),
            Transform::Gompertz { beta } => beta * x,
            Transform::Gev { sigma, xi, .. } => {
                let xi = if xi.abs() < GUMBEL_THRESHOLD { 0.0 } else { xi };
                (1.0 + xi) * self.gev_log_base(x) - sigma.ln()
            }
        })
    }

    pub fn intensity(&self, x: f64) -> Result<f64> {
        Ok(self.log_intensity(x)?.exp())
    }

    /// `exp(T g⁻¹(x))` evaluated through the family's matrix function, with
    /// `λ(x)`: `(x/β + 1)^T` for Pareto, `exp(T x^β)` for Weibull,
    /// `exp(T (e^{βx} - 1)/β)` for Gompertz and `exp(T s)` with
    /// `s = (1 + ξ(x-μ)/σ)^{-1/ξ}` for GEV.
    pub fn matrix_kernel(&self, t: &SubIntensity, x: f64) -> Result<(Matrix, f64)> {
        if !self.in_support(x) {
            return Err(Error::domain(x, format!("outside the support of the {} transform", self.family())));
        }
        Ok(match *self {
            Transform::Identity => (matrix_function(t, MatrixFunction::ExpOfScaled(x))?, 1.0),
            Transform::Pareto { beta } => (
                matrix_function(t, MatrixFunction::Power(x / beta + 1.0))?,
                1.0 / (beta * (x / beta + 1.0)),
            ),
            Transform::Weibull { beta } => (
                matrix_function(t, MatrixFunction::ExpOfScaled(x.powf(beta)))?,
                beta * x.powf(beta - 1.0),
            ),
            Transform::Gompertz { beta } => (
                matrix_function(t, MatrixFunction::ExpOfScaled(((beta * x).exp() - 1.0) / beta))?,
                (beta * x).exp(),
            ),
            Transform::Gev { mu, sigma, xi } => {
                let z = (x - mu) / sigma;
                if xi.abs() < GUMBEL_THRESHOLD {
                    let s = (-z).exp();
                    (matrix_function(t, MatrixFunction::ExpOfScaled(s))?, s / sigma)
                } else {
                    let s = (1.0 + xi * z).powf(-1.0 / xi);
                    (matrix_function(t, MatrixFunction::ExpOfScaled(s))?, s.powf(1.0 + xi) / sigma)
                }
            }
        })
    }

    /// Starting parameters for fitting the family to positive data.
    pub fn initial(family: Family, data: &[f64]) -> Result<Transform> {
        let n = data.len() as f64;
        if data.is_empty() {
            return Err(Error::InsufficientData("no observations".into()));
        }
        let mean = data.iter().sum::<f64>() / n;
        match family {
            Family::Identity => Ok(Transform::Identity),
            Family::Pareto => Ok(Transform::Pareto { beta: 1.0 }),
            Family::Weibull => Ok(Transform::Weibull { beta: 1.0 }),
            Family::Gompertz => Transform::from_params(family, &[1.0 / mean]),
            Family::Gev => {
                let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                let mut sigma = (var.sqrt() * 6f64.sqrt() / std::f64::consts::PI).max(1e-3 * mean.abs().max(1.0));
                let xi = 0.1;
                let mut t;
                loop {
                    let mu = mean - 0.5772156649015329 * sigma;
                    t = Transform::from_params(family, &[mu, sigma, xi])?;
                    if data.iter().all(|&x| t.in_support(x)) {
                        break;
                    }
                    sigma *= 2.0;
                    if !sigma.is_finite() {
                        return Err(Error::InvalidParameter("cannot place data in GEV support".into()));
                    }
                }
                Ok(t)
            }
        }
    }
}

/// Central finite-difference gradient of `f` at `params` with step
/// `max(1e-7, 1e-7 |β_j|)`. Falls back to a one-sided difference when one
/// neighbour is infeasible (`None`).
pub(crate) fn fd_gradient<F>(params: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let centre = std::cell::OnceCell::new();
    let f0 = || *centre.get_or_init(|| f(params));
    let mut grad = Vec::with_capacity(params.len());
    let mut work = params.to_vec();
    for j in 0..params.len() {
        let h = (1e-7 * params[j].abs()).max(1e-7);
        work[j] = params[j] + h;
        let up = f(&work);
        work[j] = params[j] - h;
        let down = f(&work);
        work[j] = params[j];
        let g = match (up, down) {
            (Some(u), Some(d)) => (u - d) / (2.0 * h),
            (Some(u), None) if f0().is_some() => (u - f0().unwrap()) / h,
            (None, Some(d)) if f0().is_some() => (f0().unwrap() - d) / h,
            _ => {
                return Err(Error::domain(params[j], "no feasible neighbour for the gradient"));
            }
        };
        grad.push(g);
    }
    Ok(grad)
}

/// Inhomogeneous phase-type law `g(Y)`, `Y ~ PH(π, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IphModel {
    base: PhModel,
    transform: Transform,
}

impl IphModel {
    pub fn new(base: PhModel, transform: Transform) -> Result<Self> {
        transform.validate()?;
        Ok(IphModel { base, transform })
    }

    pub fn base(&self) -> &PhModel {
        &self.base
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    fn base_points(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.transform.to_base(x)).collect()
    }

    /// `λ(x) f_Y(g⁻¹(x))`.
    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.densities(&[x])?[0])
    }

    pub fn densities(&self, xs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.log_densities(xs)?.into_iter().map(f64::exp).collect())
    }

    pub fn log_densities(&self, xs: &[f64]) -> Result<Vec<f64>> {
        for &x in xs {
            if !(self.transform.in_support(x)) {
                return Err(Error::domain(x, format!("outside the support of the {} model", self.transform.family())));
            }
        }
        let ys = self.base_points(xs)?;
        let f = self.base.densities(&ys)?;
        xs.iter()
            .zip(f)
            .map(|(&x, fy)| Ok(fy.ln() + self.transform.log_intensity(x)?))
            .collect()
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        Ok(self.survivals(&[x])?[0])
    }

    pub fn survivals(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let ys = self.base_points(xs)?;
        let s = self.base.survivals(&ys)?;
        Ok(if self.transform.is_increasing() {
            s
        } else {
            s.into_iter().map(|v| (1.0 - v).clamp(0.0, 1.0)).collect()
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival(x)?)
    }

    /// Density through the family's own matrix-function formula, computed
    /// with a full matrix exponential or matrix power.
    pub fn density_closed_form(&self, x: f64) -> Result<f64> {
        let (m, lambda) = self.transform.matrix_kernel(self.base.t(), x)?;
        Ok(dot(&m.left_mul(self.base.pi()), self.base.exit()) * lambda)
    }

    pub fn survival_closed_form(&self, x: f64) -> Result<f64> {
        let (m, _) = self.transform.matrix_kernel(self.base.t(), x)?;
        let s: f64 = m.left_mul(self.base.pi()).iter().sum();
        Ok(if self.transform.is_increasing() { s } else { 1.0 - s })
    }

    /// Quantile by bisection on the survival function of the base law.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(q, "quantile level must lie in (0, 1)"));
        }
        if self.transform.is_increasing() {
            Ok(self.transform.from_base(self.base.quantile(q)?))
        } else {
            Ok(self.transform.from_base(self.base.quantile(1.0 - q)?))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.transform.from_base(self.base.sample_time(rng))
    }

    /// `Σ log f(x_i)`.
    pub fn log_likelihood(&self, xs: &[f64]) -> Result<f64> {
        Ok(self.log_densities(xs)?.iter().sum())
    }
}

/// Finite-difference gradient of `Σ log f(x_i)` with respect to the transform
/// parameters.
pub fn transform_log_density_gradient(m: &IphModel, data: &[f64]) -> Result<Vec<f64>> {
    let family = m.transform.family();
    if let Some(&bad) = data.iter().find(|&&x| !m.transform.in_support(x)) {
        return Err(Error::domain(bad, "observation outside the support"));
    }
    fd_gradient(&m.transform.params(), |p| {
        let t = Transform::from_params(family, p).ok()?;
        if !data.iter().all(|&x| t.in_support(x)) {
            return None;
        }
        let candidate = IphModel::new(m.base.clone(), t).ok()?;
        candidate.log_likelihood(data).ok().filter(|v| v.is_finite())
    })
}
