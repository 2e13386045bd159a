//! Univariate fits: phase-type and inhomogeneous phase-type laws.

use crate::error::{Error, Result};
use crate::iph::{Family, IphModel, Transform};
use crate::ph::PhModel;
use crate::rng::stream;

use super::ascent::ascend;
use super::init::{positive_mean, random_ph};
use super::stats::{accumulate, log_likelihood, mstep};
use super::{likelihood_converged, total_weight, FitConfig, FitResult, Init, Observation, Value};

/// Fits `PH(π, T)` with `p` phases to exact and interval-censored data.
pub fn fit_ph(data: &[Observation], p: usize, cfg: &FitConfig) -> Result<FitResult<PhModel>> {
    let fit = fit_iph(data, p, Family::Identity, cfg)?;
    Ok(FitResult {
        model: fit.model.base().clone(),
        log_likelihood: fit.log_likelihood,
        converged: fit.converged,
        iterations: fit.iterations,
        pruned: fit.pruned,
        reward_change: fit.reward_change,
        warnings: fit.warnings,
    })
}

/// Fits `g(Y)`, `Y ~ PH(π, T)` with `p` phases and `g` from `family`.
pub fn fit_iph(data: &[Observation], p: usize, family: Family, cfg: &FitConfig) -> Result<FitResult<IphModel>> {
    cfg.validate()?;
    if p == 0 {
        return Err(Error::InvalidParameter("at least one phase is required".into()));
    }
    let total = total_weight(data)?;
    let mut transform = initial_transform(data, family, cfg)?;
    let mut base_data = to_base(data, &transform)?;
    let mut model = match &cfg.init {
        Init::Random => {
            let mean = positive_mean(base_data.iter().map(|o| (o.representative(), o.weight())));
            random_ph(p, mean, &mut stream(cfg.seed, 0))?
        }
        Init::Ph(m) => m.clone(),
        Init::Block(_) => return Err(Error::InvalidParameter("a block model cannot start a univariate fit".into())),
    };
    let fit_transform = cfg.fit_transform && family != Family::Identity;
    let step = cfg.step_length.unwrap_or(family.default_step_length());
    let tol = cfg.grad_tol.unwrap_or(family.default_grad_tol());

    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut pruned = Vec::new();
    let mut warnings = Vec::new();
    for it in 0..cfg.iterations {
        let acc = accumulate(&model, &base_data, cfg.eps)?;
        let ll = acc.log_likelihood + log_intensity_sum(data, &transform)?;
        trace.push(ll);
        if let Some(progress) = cfg.progress {
            progress(it, ll);
        }
        let (next, removed) = mstep(&acc.stats, total)?;
        for k in removed {
            warnings.push(format!("state {k} removed at iteration {it}: zero expected occupation"));
            pruned.push(k);
        }
        model = next;
        if fit_transform {
            let params = ascend(
                transform.params(),
                step,
                tol,
                cfg.max_ascent_steps,
                |q| {
                    let t = Transform::from_params(family, q).ok()?;
                    iph_log_likelihood(&model, &t, data).ok().filter(|v| v.is_finite())
                },
            )?;
            transform = Transform::from_params(family, &params)?;
            base_data = to_base(data, &transform)?;
        }
    }
    trace.push(iph_log_likelihood(&model, &transform, data)?);
    Ok(FitResult {
        model: IphModel::new(model, transform)?,
        converged: likelihood_converged(&trace),
        log_likelihood: trace,
        iterations: cfg.iterations,
        pruned,
        reward_change: Vec::new(),
        warnings,
    })
}

fn initial_transform(data: &[Observation], family: Family, cfg: &FitConfig) -> Result<Transform> {
    match &cfg.initial_transforms {
        Some(ts) => {
            let [t] = ts.as_slice() else {
                return Err(Error::DimensionMismatch(format!("{} starting transforms for one coordinate", ts.len())));
            };
            if t.family() != family {
                return Err(Error::InvalidParameter(format!("starting transform is {}, expected {family}", t.family())));
            }
            t.validate()?;
            Ok(*t)
        }
        None => {
            let values: Vec<f64> = data.iter().map(Observation::representative).collect();
            Transform::initial(family, &values)
        }
    }
}

pub(crate) fn to_base(data: &[Observation], t: &Transform) -> Result<Vec<Observation>> {
    if matches!(t, Transform::Identity) {
        return Ok(data.to_vec());
    }
    data.iter().map(|o| o.to_base(t)).collect()
}

/// `Σ w log λ(x)` over the exact observations.
fn log_intensity_sum(data: &[Observation], t: &Transform) -> Result<f64> {
    if matches!(t, Transform::Identity) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for obs in data {
        if let Value::Exact(x) = obs.value() {
            total += obs.weight() * t.log_intensity(x)?;
        }
    }
    Ok(total)
}

/// Observed-data log-likelihood of `g(Y)`, `Y ~ model`.
pub(crate) fn iph_log_likelihood(model: &PhModel, t: &Transform, data: &[Observation]) -> Result<f64> {
    let base = to_base(data, t)?;
    Ok(log_likelihood(model, &base)? + log_intensity_sum(data, t)?)
}
