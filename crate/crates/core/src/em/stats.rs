//! Conditional expectations of the complete-data statistics and the
//! complete-data maximum likelihood step.

use crate::error::{Error, Result};
use crate::linalg::{van_loan, Lu, Matrix, SubIntensity};
use crate::ph::{dot, PhModel};

use super::{Observation, Value};

/// Observations per block of the ordered reduction.
const CHUNK: usize = 64;

/// Smallest likelihood contribution accepted by the E-steps.
pub const UNDERFLOW: f64 = 1e-300;

/// Expected complete-data statistics: starts `B_k`, occupation times `Z_k`,
/// transition counts `N_kl` (off-diagonal) and exits `N_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub starts: Vec<f64>,
    pub occupation: Vec<f64>,
    pub transitions: Matrix,
    pub exits: Vec<f64>,
}

impl SufficientStats {
    pub fn zeros(p: usize) -> Self {
        SufficientStats {
            starts: vec![0.0; p],
            occupation: vec![0.0; p],
            transitions: Matrix::zeros(p, p),
            exits: vec![0.0; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.starts.len()
    }

    pub fn add(&mut self, other: &SufficientStats) {
        for (a, b) in self.starts.iter_mut().zip(&other.starts) {
            *a += b;
        }
        for (a, b) in self.occupation.iter_mut().zip(&other.occupation) {
            *a += b;
        }
        self.transitions = &self.transitions + &other.transitions;
        for (a, b) in self.exits.iter_mut().zip(&other.exits) {
            *a += b;
        }
    }
}

/// Folds `add` over `items` in fixed blocks and merges the blocks in index
/// order, so the result is the same for any number of threads.
pub(crate) fn ordered_reduce<T, S, Z, F, M>(items: &[T], zero: Z, add: F, merge: M) -> Result<S>
where
    T: Sync,
    S: Send,
    Z: Fn() -> S + Sync,
    F: Fn(&mut S, usize, &T) -> Result<()> + Sync,
    M: Fn(&mut S, S),
{
    let run = |c: usize| -> Result<S> {
        let mut acc = zero();
        let start = c * CHUNK;
        for (i, item) in items[start..(start + CHUNK).min(items.len())].iter().enumerate() {
            add(&mut acc, start + i, item)?;
        }
        Ok(acc)
    };
    let blocks = items.len().div_ceil(CHUNK);
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<S>> = {
        use rayon::prelude::*;
        (0..blocks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<S>> = (0..blocks).map(run).collect();
    let mut total = zero();
    for part in parts {
        merge(&mut total, part?);
    }
    Ok(total)
}

/// Statistics plus the log-likelihood of the data under the current model.
#[derive(Debug, Clone)]
pub(crate) struct Accumulated {
    pub stats: SufficientStats,
    pub log_likelihood: f64,
}

impl Accumulated {
    pub(crate) fn zeros(p: usize) -> Self {
        Accumulated {
            stats: SufficientStats::zeros(p),
            log_likelihood: 0.0,
        }
    }

    pub(crate) fn merge(&mut self, other: Accumulated) {
        self.stats.add(&other.stats);
        self.log_likelihood += other.log_likelihood;
    }
}

/// Adds one exact observation `y > 0` with weight `w`.
fn add_exact(m: &PhModel, acc: &mut Accumulated, index: usize, y: f64, w: f64, eps: f64) -> Result<()> {
    if !(y > 0.0) {
        return Err(Error::domain(y, "exact observations must be positive"));
    }
    let t = m.matrix();
    let exit = m.exit();
    let pi = m.pi();
    let vl = van_loan(t, exit, pi, y, eps)?;
    let a = vl.exp.left_mul(pi);
    let b = vl.exp.mul_vec(exit);
    let f = dot(pi, &b);
    if !(f >= UNDERFLOW) {
        return Err(Error::NumericalUnderflow { index, value: f });
    }
    let p = m.dim();
    let s = &mut acc.stats;
    let g = &vl.integral;
    let scale = w / f;
    for k in 0..p {
        s.starts[k] += scale * pi[k] * b[k];
        s.occupation[k] += scale * g[(k, k)];
        s.exits[k] += scale * exit[k] * a[k];
        for l in 0..p {
            if l != k && t[(k, l)] > 0.0 {
                s.transitions[(k, l)] += scale * t[(k, l)] * g[(l, k)];
            }
        }
    }
    acc.log_likelihood += w * f.ln();
    Ok(())
}

/// Adds one observation known to lie in `(v, w]`, `w` possibly infinite.
#[allow(clippy::too_many_arguments)]
fn add_interval(
    m: &PhModel,
    lu: &Lu,
    acc: &mut Accumulated,
    index: usize,
    v: f64,
    upper: f64,
    weight: f64,
    eps: f64,
) -> Result<()> {
    let p = m.dim();
    let t = m.matrix();
    let pi = m.pi();
    let ones = vec![1.0; p];
    // exp(T x) and ∫₀ˣ exp(T(x-u)) e π exp(T u) du at one bound.
    let at = |x: f64| -> Result<(Matrix, Matrix)> {
        if x == 0.0 {
            Ok((Matrix::identity(p), Matrix::zeros(p, p)))
        } else if x.is_infinite() {
            Ok((Matrix::zeros(p, p), Matrix::zeros(p, p)))
        } else {
            let vl = van_loan(t, &ones, pi, x, eps)?;
            Ok((vl.exp, vl.integral))
        }
    };
    let (ev, hv) = at(v)?;
    let (ew, hw) = at(upper)?;
    let av = ev.left_mul(pi);
    let aw = ew.left_mul(pi);
    let sv = ev.row_sums();
    let sw = ew.row_sums();
    let den: f64 = av.iter().sum::<f64>() - aw.iter().sum::<f64>();
    if !(den >= UNDERFLOW) {
        return Err(Error::NumericalUnderflow { index, value: den });
    }
    let diff: Vec<f64> = av.iter().zip(&aw).map(|(a, b)| a - b).collect();
    let occupied = lu.solve_row(&diff);
    let exit = m.exit();
    let scale = weight / den;
    let s = &mut acc.stats;
    for k in 0..p {
        s.starts[k] += scale * (pi[k] * (sv[k] - sw[k])).max(0.0);
        s.occupation[k] += scale * (occupied[k] - (hw[(k, k)] - hv[(k, k)])).max(0.0);
        s.exits[k] += scale * (exit[k] * occupied[k]).max(0.0);
        for l in 0..p {
            if l != k && t[(k, l)] > 0.0 {
                s.transitions[(k, l)] += scale * (t[(k, l)] * (occupied[k] - (hw[(l, k)] - hv[(l, k)]))).max(0.0);
            }
        }
    }
    acc.log_likelihood += weight * den.ln();
    Ok(())
}

/// E-step over mixed exact and interval-censored observations, returning the
/// statistics and the log-likelihood of the current model.
pub(crate) fn accumulate(m: &PhModel, data: &[Observation], eps: f64) -> Result<Accumulated> {
    let p = m.dim();
    let lu = m.t().neg_lu();
    ordered_reduce(
        data,
        || Accumulated::zeros(p),
        |acc, i, obs| match obs.value() {
            Value::Exact(y) => add_exact(m, acc, i, y, obs.weight(), eps),
            Value::Interval { lower, upper } => add_interval(m, &lu, acc, i, lower, upper, obs.weight(), eps),
        },
        Accumulated::merge,
    )
}

/// Conditional expectations given exact observations.
pub fn estep_exact(m: &PhModel, data: &[Observation]) -> Result<SufficientStats> {
    if let Some(obs) = data.iter().find(|o| !o.is_exact()) {
        return Err(Error::InvalidParameter(format!("censored observation {obs:?} passed to the exact E-step")));
    }
    Ok(accumulate(m, data, crate::linalg::DEFAULT_EPS)?.stats)
}

/// Conditional expectations given interval-censored observations.
pub fn estep_censored(m: &PhModel, data: &[Observation]) -> Result<SufficientStats> {
    if let Some(obs) = data.iter().find(|o| o.is_exact()) {
        return Err(Error::InvalidParameter(format!("exact observation {obs:?} passed to the censored E-step")));
    }
    Ok(accumulate(m, data, crate::linalg::DEFAULT_EPS)?.stats)
}

/// Conditional expectations given any mix of exact and censored data.
pub fn estep(m: &PhModel, data: &[Observation], eps: f64) -> Result<SufficientStats> {
    Ok(accumulate(m, data, eps)?.stats)
}

/// `Σ w_i log L_i` with `L_i` the density or interval probability.
pub fn log_likelihood(m: &PhModel, data: &[Observation]) -> Result<f64> {
    let mut points = Vec::new();
    for obs in data {
        match obs.value() {
            Value::Exact(y) => {
                if !(y > 0.0) {
                    return Err(Error::domain(y, "exact observations must be positive"));
                }
                points.push(y);
            }
            Value::Interval { lower, upper } => {
                points.push(lower);
                if upper.is_finite() {
                    points.push(upper);
                }
            }
        }
    }
    let rows = m.state_probabilities(&points)?;
    let exit = m.exit();
    let mut next = (0..points.len()).map(|i| rows.row(i));
    let mut total = 0.0;
    for obs in data {
        let contribution = match obs.value() {
            Value::Exact(_) => dot(next.next().unwrap(), exit),
            Value::Interval { upper, .. } => {
                let sv: f64 = next.next().unwrap().iter().sum();
                let sw: f64 = if upper.is_finite() { next.next().unwrap().iter().sum() } else { 0.0 };
                sv - sw
            }
        };
        total += obs.weight() * contribution.ln();
    }
    Ok(total)
}

/// Complete-data maximum likelihood step. States with zero expected
/// occupation are removed; their indices are returned.
pub fn mstep(stats: &SufficientStats, total_weight: f64) -> Result<(PhModel, Vec<usize>)> {
    if !(total_weight > 0.0) {
        return Err(Error::InsufficientData("total weight must be positive".into()));
    }
    let p = stats.dim();
    let (keep, pruned): (Vec<usize>, Vec<usize>) =
        (0..p).partition(|&k| stats.occupation[k] > 0.0 && stats.occupation[k].is_finite());
    if keep.is_empty() {
        return Err(Error::InvalidModel("every state has zero expected occupation".into()));
    }
    let q = keep.len();
    let mut t = Matrix::zeros(q, q);
    let mut pi = Vec::with_capacity(q);
    for (a, &k) in keep.iter().enumerate() {
        let z = stats.occupation[k];
        pi.push(stats.starts[k] / total_weight);
        let mut out = stats.exits[k] / z;
        for (b, &l) in keep.iter().enumerate() {
            if a != b {
                let rate = stats.transitions[(k, l)] / z;
                t[(a, b)] = rate;
                out += rate;
            }
        }
        t[(a, a)] = -out;
    }
    let model = PhModel::from_parts(pi, SubIntensity::new(t)?)?;
    Ok((model, pruned))
}
