//! Fixed-step gradient ascent on transform parameters.

use crate::error::{Error, Result};
use crate::iph::fd_gradient;

/// Halvings tried before a step is given up.
const MAX_HALVINGS: usize = 60;

/// Moves `params` uphill on `objective` (`None` marks infeasible points).
///
/// Each step starts at `step · ∇f` and is halved until the objective
/// improves. The ascent stops when the gradient norm drops below `tol`, after
/// `max_steps` steps, or when no halving improves the objective.
pub(crate) fn ascend<F>(params: Vec<f64>, step: f64, tol: f64, max_steps: usize, objective: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut current = params;
    let mut value = objective(&current)
        .ok_or_else(|| Error::BetaSearchFailed(format!("starting parameters {current:?} are infeasible")))?;
    for _ in 0..max_steps {
        let grad = fd_gradient(&current, &objective).map_err(|e| Error::BetaSearchFailed(e.to_string()))?;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::BetaSearchFailed(format!("gradient {grad:?} is not finite")));
        }
        if norm < tol {
            break;
        }
        let mut h = step;
        let mut feasible = false;
        let mut improved = false;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = current.iter().zip(&grad).map(|(p, g)| p + h * g).collect();
            if let Some(v) = objective(&candidate) {
                feasible = true;
                if v > value {
                    current = candidate;
                    value = v;
                    improved = true;
                    break;
                }
            }
            h *= 0.5;
        }
        if !feasible {
            return Err(Error::BetaSearchFailed(format!(
                "every step from {current:?} leaves the feasible region"
            )));
        }
        if !improved {
            break;
        }
    }
    Ok(current)
}
