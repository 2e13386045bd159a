//! Multivariate fits: MPH* laws from row sums and marginal rewards, and the
//! bivariate block model with optional transformed marginals.

use crate::error::{Error, Result};
use crate::iph::{Family, Transform};
use crate::linalg::{expm, van_loan, Matrix, DEFAULT_EPS};
use crate::mph::{BivariateBlockModel, InhomBase, InhomMph, MphModel};
use crate::ph::{dot, PhModel};
use crate::rng::stream;

use super::ascent::ascend;
use super::init::{positive_mean, random_block, random_ph};
use super::stats::{accumulate, log_likelihood, mstep, ordered_reduce, Accumulated, SufficientStats, UNDERFLOW};
use super::uni::fit_ph;
use super::{likelihood_converged, FitConfig, FitResult, Init, Observation, Row, Value, REWARD_TOLERANCE};

/// Observation of the row sum: exact if every entry is exact, otherwise the
/// interval spanned by the summed bounds.
pub fn sum_observation(row: &[Observation]) -> Result<Observation> {
    let first = row.first().ok_or_else(|| Error::InsufficientData("empty row".into()))?;
    let weight = first.weight();
    let (mut lower, mut upper, mut exact) = (0.0, 0.0, true);
    for obs in row {
        if obs.weight() != weight {
            return Err(Error::InvalidParameter("all entries of a row must carry the same weight".into()));
        }
        match obs.value() {
            Value::Exact(y) => {
                lower += y;
                upper += y;
            }
            Value::Interval { lower: v, upper: w } => {
                exact = false;
                lower += v;
                upper += w;
            }
        }
    }
    let sum = if exact {
        Observation::exact(lower)?
    } else {
        Observation::interval(lower, upper)?
    };
    sum.with_weight(weight)
}

fn validate_rows(sample: &[Row]) -> Result<usize> {
    let d = sample
        .first()
        .ok_or_else(|| Error::InsufficientData("no observations".into()))?
        .len();
    if d == 0 {
        return Err(Error::DimensionMismatch("rows have no coordinates".into()));
    }
    if let Some(i) = sample.iter().position(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {d}", sample[i].len())));
    }
    Ok(d)
}

/// Expected reward earned in each state for each coordinate given that
/// coordinate's observation, summed over rows: a `p × d` matrix whose
/// row-normalised form is the updated reward matrix.
pub fn estep_rewards(model: &MphModel, sample: &[Row]) -> Result<Matrix> {
    let d = validate_rows(sample)?;
    if d != model.coords() {
        return Err(Error::DimensionMismatch(format!("{d} coordinates for a model with {}", model.coords())));
    }
    reward_occupation(model, sample, DEFAULT_EPS)
}

fn reward_occupation(model: &MphModel, sample: &[Row], eps: f64) -> Result<Matrix> {
    let mut z = Matrix::zeros(model.dim(), model.coords());
    for j in 0..model.coords() {
        let (marginal, plus) = model.marginal_with_states(j)?;
        // A zero observation earns no reward in the positive-reward states.
        let data: Vec<Observation> = sample
            .iter()
            .map(|r| r[j])
            .filter(|o| o.value() != Value::Exact(0.0))
            .collect();
        if data.is_empty() {
            continue;
        }
        let occupation = accumulate(&marginal, &data, eps)?.stats.occupation;
        for (a, &k) in plus.iter().enumerate() {
            z[(k, j)] = occupation[a];
        }
    }
    Ok(z)
}

/// Row-normalised `z`; rows without information keep their old rewards.
fn normalize_rewards(z: &Matrix, old: &Matrix) -> Matrix {
    let mut r = old.clone();
    for k in 0..z.rows() {
        let total: f64 = z.row(k).iter().sum();
        if total > 0.0 && total.is_finite() {
            for j in 0..z.cols() {
                r[(k, j)] = z[(k, j)] / total;
            }
        }
    }
    r
}

fn drop_rows(r: &Matrix, removed: &[usize]) -> Matrix {
    let keep: Vec<usize> = (0..r.rows()).filter(|k| !removed.contains(k)).collect();
    let cols: Vec<usize> = (0..r.cols()).collect();
    r.select(&keep, &cols)
}

fn censored_row_warning(sample: &[Row]) -> Option<String> {
    let count = sample.iter().filter(|r| r.iter().all(|o| !o.is_exact())).count();
    (count > 0).then(|| format!("{count} rows are censored in every coordinate and carry little information on the rewards"))
}

fn starting_ph(sums: &[Observation], p: usize, cfg: &FitConfig) -> Result<PhModel> {
    match &cfg.init {
        Init::Random => {
            let mean = positive_mean(sums.iter().map(|o| (o.representative(), o.weight())));
            random_ph(p, mean, &mut stream(cfg.seed, 0))
        }
        Init::Ph(m) => Ok(m.clone()),
        Init::Block(b) => Ok(b.to_mph().absorption()),
    }
}

/// Fits an MPH* law with `p` states to rows of `d` observations, updating
/// `(π, T)` from the row sums and the rewards from the marginals in every
/// iteration. The likelihood trace is that of the row sums.
pub fn fit_mph(sample: &[Row], p: usize, cfg: &FitConfig) -> Result<FitResult<MphModel>> {
    cfg.validate()?;
    if p == 0 {
        return Err(Error::InvalidParameter("at least one phase is required".into()));
    }
    let d = validate_rows(sample)?;
    let sums: Vec<Observation> = sample.iter().map(|r| sum_observation(r)).collect::<Result<_>>()?;
    let total: f64 = sums.iter().map(Observation::weight).sum();
    let mut base = starting_ph(&sums, p, cfg)?;
    let mut r = Matrix::from_vec(base.dim(), d, vec![1.0 / d as f64; base.dim() * d])?;
    let mut warnings: Vec<String> = censored_row_warning(sample).into_iter().collect();
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut reward_change = Vec::with_capacity(cfg.iterations);
    let mut pruned = Vec::new();
    for it in 0..cfg.iterations {
        let acc = accumulate(&base, &sums, cfg.eps)?;
        trace.push(acc.log_likelihood);
        if let Some(progress) = cfg.progress {
            progress(it, acc.log_likelihood);
        }
        let model = MphModel::from_base(&base, r.clone())?;
        let z = reward_occupation(&model, sample, cfg.eps)?;
        let updated = normalize_rewards(&z, &r);
        let (next, removed) = mstep(&acc.stats, total)?;
        let old = drop_rows(&r, &removed);
        r = drop_rows(&updated, &removed);
        reward_change.push(r.max_abs_diff(&old));
        for k in removed {
            warnings.push(format!("state {k} removed at iteration {it}: zero expected occupation"));
            pruned.push(k);
        }
        base = next;
    }
    trace.push(log_likelihood(&base, &sums)?);
    let converged = likelihood_converged(&trace) && reward_change.last().is_none_or(|c| *c < REWARD_TOLERANCE);
    Ok(FitResult {
        model: MphModel::from_base(&base, r)?,
        log_likelihood: trace,
        converged,
        iterations: cfg.iterations,
        pruned,
        reward_change,
        warnings,
    })
}

/// Fits `(π, T)` to the row sums first and then iterates the reward update
/// with `(π, T)` held fixed.
pub fn fit_mph_two_stage(sample: &[Row], p: usize, cfg: &FitConfig) -> Result<FitResult<MphModel>> {
    let d = validate_rows(sample)?;
    let sums: Vec<Observation> = sample.iter().map(|r| sum_observation(r)).collect::<Result<_>>()?;
    let stage1 = fit_ph(&sums, p, cfg)?;
    let base = stage1.model;
    let mut r = Matrix::from_vec(base.dim(), d, vec![1.0 / d as f64; base.dim() * d])?;
    let mut reward_change = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let model = MphModel::from_base(&base, r.clone())?;
        let updated = normalize_rewards(&reward_occupation(&model, sample, cfg.eps)?, &r);
        let change = updated.max_abs_diff(&r);
        r = updated;
        reward_change.push(change);
        if change == 0.0 {
            break;
        }
    }
    let mut warnings = stage1.warnings;
    warnings.extend(censored_row_warning(sample));
    Ok(FitResult {
        model: MphModel::from_base(&base, r)?,
        converged: stage1.converged && reward_change.last().is_none_or(|c| *c < REWARD_TOLERANCE),
        log_likelihood: stage1.log_likelihood,
        iterations: stage1.iterations,
        pruned: stage1.pruned,
        reward_change,
        warnings,
    })
}

/// Adds one exact pair to the statistics of the block model, numbered
/// `0..p1` for the first block and `p1..p1+p2` for the second.
fn add_pair(m: &BivariateBlockModel, acc: &mut Accumulated, index: usize, y: (f64, f64), w: f64, eps: f64) -> Result<()> {
    let (p1, p2) = (m.p1(), m.p2());
    let (t11, t12, t22) = (m.t11().matrix(), m.t12(), m.t22().matrix());
    let alpha = m.alpha();
    let s2 = m.t22().exit();
    let a2 = expm(t22, y.1, eps)?;
    let a2s2 = a2.mul_vec(s2);
    let c = t12.mul_vec(&a2s2);
    let vl1 = van_loan(t11, &c, alpha, y.0, eps)?;
    let alpha_a1 = vl1.exp.left_mul(alpha);
    let a1c = vl1.exp.mul_vec(&c);
    let f = dot(alpha, &a1c);
    if !(f >= UNDERFLOW) {
        return Err(Error::NumericalUnderflow { index, value: f });
    }
    let d = t12.left_mul(&alpha_a1);
    let vl2 = van_loan(t22, s2, &d, y.1, eps)?;
    let d_a2 = a2.left_mul(&d);
    let scale = w / f;
    let s = &mut acc.stats;
    let g1 = &vl1.integral;
    for k in 0..p1 {
        s.starts[k] += scale * alpha[k] * a1c[k];
        s.occupation[k] += scale * g1[(k, k)];
        for l in 0..p1 {
            if l != k && t11[(k, l)] > 0.0 {
                s.transitions[(k, l)] += scale * t11[(k, l)] * g1[(l, k)];
            }
        }
        for m2 in 0..p2 {
            if t12[(k, m2)] > 0.0 {
                s.transitions[(k, p1 + m2)] += scale * t12[(k, m2)] * alpha_a1[k] * a2s2[m2];
            }
        }
    }
    let g2 = &vl2.integral;
    for a in 0..p2 {
        s.occupation[p1 + a] += scale * g2[(a, a)];
        s.exits[p1 + a] += scale * s2[a] * d_a2[a];
        for b in 0..p2 {
            if b != a && t22[(a, b)] > 0.0 {
                s.transitions[(p1 + a, p1 + b)] += scale * t22[(a, b)] * g2[(b, a)];
            }
        }
    }
    acc.log_likelihood += w * f.ln();
    Ok(())
}

fn block_accumulate(m: &BivariateBlockModel, pairs: &[((f64, f64), f64)], eps: f64) -> Result<Accumulated> {
    let p = m.p1() + m.p2();
    ordered_reduce(
        pairs,
        || Accumulated::zeros(p),
        |acc, i, &(y, w)| add_pair(m, acc, i, y, w, eps),
        Accumulated::merge,
    )
}

/// Conditional expectations of the block model's complete-data statistics
/// given exact pairs; states `0..p1` are the first block.
pub fn estep_block(m: &BivariateBlockModel, sample: &[Row]) -> Result<SufficientStats> {
    let pairs = exact_pairs(sample)?;
    Ok(block_accumulate(m, &pairs, DEFAULT_EPS)?.stats)
}

/// Splits the full-generator M-step result back into blocks.
fn block_mstep(acc: &Accumulated, p1: usize, total: f64) -> Result<(BivariateBlockModel, Vec<usize>)> {
    let (full, removed) = mstep(&acc.stats, total)?;
    let q1 = p1 - removed.iter().filter(|&&k| k < p1).count();
    let q = full.dim();
    if q1 == 0 || q1 == q {
        return Err(Error::InvalidModel("state pruning emptied one block of the bivariate model".into()));
    }
    let t = full.matrix();
    let model = BivariateBlockModel::new(
        full.pi()[..q1].to_vec(),
        t.submatrix(0, 0, q1, q1),
        t.submatrix(0, q1, q1, q - q1),
        t.submatrix(q1, q1, q - q1, q - q1),
    )?;
    Ok((model, removed))
}

/// Exact positive pairs with their weights.
fn exact_pairs(sample: &[Row]) -> Result<Vec<((f64, f64), f64)>> {
    let d = validate_rows(sample)?;
    if d != 2 {
        return Err(Error::DimensionMismatch(format!("bivariate fits need 2 coordinates, got {d}")));
    }
    sample
        .iter()
        .enumerate()
        .map(|(i, r)| match (r[0].value(), r[1].value()) {
            (Value::Exact(a), Value::Exact(b)) if r[0].weight() == r[1].weight() => Ok(((a, b), r[0].weight())),
            (Value::Exact(_), Value::Exact(_)) => {
                Err(Error::InvalidParameter(format!("row {i}: entries carry different weights")))
            }
            _ => Err(Error::Unsupported(format!("row {i} is censored; bivariate block fits need exact pairs"))),
        })
        .collect()
}

/// Fits the bivariate block model with `p1` and `p2` states to exact pairs.
pub fn fit_biv_block(sample: &[Row], p1: usize, p2: usize, cfg: &FitConfig) -> Result<FitResult<BivariateBlockModel>> {
    let fit = fit_biv_inhom(sample, p1, p2, [Family::Identity, Family::Identity], cfg)?;
    let model = match fit.model.base() {
        InhomBase::Block(b) => b.clone(),
        InhomBase::Mph(_) => unreachable!("block fits return block models"),
    };
    Ok(FitResult {
        model,
        log_likelihood: fit.log_likelihood,
        converged: fit.converged,
        iterations: fit.iterations,
        pruned: fit.pruned,
        reward_change: fit.reward_change,
        warnings: fit.warnings,
    })
}

fn initial_transforms(pairs: &[((f64, f64), f64)], families: [Family; 2], cfg: &FitConfig) -> Result<[Transform; 2]> {
    match &cfg.initial_transforms {
        Some(ts) => {
            let [a, b] = ts.as_slice() else {
                return Err(Error::DimensionMismatch(format!("{} starting transforms for two coordinates", ts.len())));
            };
            for (t, f) in [(a, families[0]), (b, families[1])] {
                if t.family() != f {
                    return Err(Error::InvalidParameter(format!("starting transform is {}, expected {f}", t.family())));
                }
                t.validate()?;
            }
            Ok([*a, *b])
        }
        None => {
            let x1: Vec<f64> = pairs.iter().map(|p| p.0 .0).collect();
            let x2: Vec<f64> = pairs.iter().map(|p| p.0 .1).collect();
            Ok([Transform::initial(families[0], &x1)?, Transform::initial(families[1], &x2)?])
        }
    }
}

fn pairs_to_base(pairs: &[((f64, f64), f64)], t: &[Transform; 2]) -> Result<Vec<((f64, f64), f64)>> {
    pairs
        .iter()
        .map(|&((a, b), w)| {
            for (x, g) in [(a, &t[0]), (b, &t[1])] {
                if !g.in_support(x) {
                    return Err(Error::domain(x, format!("outside the support of the {} transform", g.family())));
                }
            }
            Ok(((t[0].to_base(a)?, t[1].to_base(b)?), w))
        })
        .collect()
}

fn block_log_likelihood(m: &BivariateBlockModel, t: &[Transform; 2], pairs: &[((f64, f64), f64)]) -> Result<f64> {
    let xs: Vec<(f64, f64)> = pairs.iter().map(|p| p.0).collect();
    let model = InhomMph::new(InhomBase::Block(m.clone()), t.to_vec())?;
    let logs = model.log_densities(&xs)?;
    Ok(logs.iter().zip(pairs).map(|(l, p)| p.1 * l).sum())
}

/// Fits the bivariate block model to exact pairs with marginal transforms
/// from `families`.
pub fn fit_biv_inhom(
    sample: &[Row],
    p1: usize,
    p2: usize,
    families: [Family; 2],
    cfg: &FitConfig,
) -> Result<FitResult<InhomMph>> {
    cfg.validate()?;
    if p1 == 0 || p2 == 0 {
        return Err(Error::InvalidParameter("both blocks need at least one state".into()));
    }
    let pairs = exact_pairs(sample)?;
    if let Some(&((a, b), _)) = pairs.iter().find(|((a, b), _)| !(*a > 0.0 && *b > 0.0)) {
        return Err(Error::domain(if a > 0.0 { b } else { a }, "bivariate fits need positive pairs"));
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut transforms = initial_transforms(&pairs, families, cfg)?;
    let mut base_pairs = pairs_to_base(&pairs, &transforms)?;
    let mut model = match &cfg.init {
        Init::Random => {
            let m1 = positive_mean(base_pairs.iter().map(|p| (p.0 .0, p.1)));
            let m2 = positive_mean(base_pairs.iter().map(|p| (p.0 .1, p.1)));
            random_block(p1, p2, [m1, m2], &mut stream(cfg.seed, 0))?
        }
        Init::Block(b) => b.clone(),
        Init::Ph(_) => return Err(Error::InvalidParameter("a univariate model cannot start a block fit".into())),
    };
    let fit_transform = cfg.fit_transform && families.iter().any(|f| *f != Family::Identity);
    let active: Vec<Family> = families.iter().copied().filter(|f| *f != Family::Identity).collect();
    let step = cfg
        .step_length
        .unwrap_or_else(|| active.iter().map(|f| f.default_step_length()).fold(f64::INFINITY, f64::min));
    let tol = cfg
        .grad_tol
        .unwrap_or_else(|| active.iter().map(|f| f.default_grad_tol()).fold(f64::INFINITY, f64::min));
    let split = transforms[0].params().len();

    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut pruned = Vec::new();
    let mut warnings = Vec::new();
    for it in 0..cfg.iterations {
        let acc = block_accumulate(&model, &base_pairs, cfg.eps)?;
        let ll = acc.log_likelihood + log_intensity_sum(&pairs, &transforms)?;
        trace.push(ll);
        if let Some(progress) = cfg.progress {
            progress(it, ll);
        }
        let (next, removed) = block_mstep(&acc, model.p1(), total)?;
        for k in removed {
            warnings.push(format!("state {k} removed at iteration {it}: zero expected occupation"));
            pruned.push(k);
        }
        model = next;
        if fit_transform {
            let start: Vec<f64> = transforms.iter().flat_map(Transform::params).collect();
            let params = ascend(start, step, tol, cfg.max_ascent_steps, |q| {
                let t = [
                    Transform::from_params(families[0], &q[..split]).ok()?,
                    Transform::from_params(families[1], &q[split..]).ok()?,
                ];
                block_log_likelihood(&model, &t, &pairs).ok().filter(|v| v.is_finite())
            })?;
            transforms = [
                Transform::from_params(families[0], &params[..split])?,
                Transform::from_params(families[1], &params[split..])?,
            ];
            base_pairs = pairs_to_base(&pairs, &transforms)?;
        }
    }
    trace.push(block_log_likelihood(&model, &transforms, &pairs)?);
    Ok(FitResult {
        model: InhomMph::new(InhomBase::Block(model), transforms.to_vec())?,
        converged: likelihood_converged(&trace),
        log_likelihood: trace,
        iterations: cfg.iterations,
        pruned,
        reward_change: Vec::new(),
        warnings,
    })
}

/// `Σ w (log λ1(x1) + log λ2(x2))`.
fn log_intensity_sum(pairs: &[((f64, f64), f64)], t: &[Transform; 2]) -> Result<f64> {
    if t.iter().all(|g| matches!(g, Transform::Identity)) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &((a, b), w) in pairs {
        total += w * (t[0].log_intensity(a)? + t[1].log_intensity(b)?);
    }
    Ok(total)
}
