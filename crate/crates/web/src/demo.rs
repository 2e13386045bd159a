//! The computations behind the browser exports, callable from plain Rust.

use iphfit::em::{fit_iph, FitConfig, Observation};
use iphfit::rng::draws;
use iphfit::{BivariateBlockModel, Error, Family, IphModel, Matrix, PhModel, Result, Transform};

fn square(values: &[f64], what: &str) -> Result<Matrix> {
    let p = (values.len() as f64).sqrt().round() as usize;
    if p * p != values.len() {
        return Err(Error::DimensionMismatch(format!("{what} has {} entries, not a square number", values.len())));
    }
    Matrix::from_vec(p, p, values.to_vec())
}

/// `g(Y)` with `Y ~ PH(pi, t)` and the named transform.
pub fn iph_model(family: &str, params: &[f64], pi: &[f64], t: &[f64]) -> Result<IphModel> {
    let family = Family::parse(family).ok_or_else(|| Error::InvalidParameter(format!("unknown family '{family}'")))?;
    let base = PhModel::new(pi.to_vec(), square(t, "T")?)?;
    IphModel::new(base, Transform::from_params(family, params)?)
}

/// Block model from row-major blocks; `t12` is `p1 × p2`.
pub fn block_model(alpha: &[f64], t11: &[f64], t12: &[f64], t22: &[f64]) -> Result<BivariateBlockModel> {
    let (a, c) = (square(t11, "T11")?, square(t22, "T22")?);
    let b = Matrix::from_vec(a.rows(), c.rows(), t12.to_vec())?;
    BivariateBlockModel::new(alpha.to_vec(), a, b, c)
}

fn grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(from < to) || !from.is_finite() || !to.is_finite() {
        return Err(Error::InvalidParameter(format!("cannot place {points} points on [{from}, {to}]")));
    }
    let h = (to - from) / (points - 1) as f64;
    Ok((0..points).map(|i| from + h * i as f64).collect())
}

/// `[x, density, survival]` triples, flattened. Points outside the support
/// get density zero and survival one below it or zero above it.
pub fn curve(m: &IphModel, from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * points);
    for x in grid(from, to, points)? {
        let (f, s) = match m.transform().to_base(x) {
            Ok(y) if y > 0.0 => (m.density(x)?, m.survival(x)?),
            _ => (0.0, if x < m.quantile(0.5)? { 1.0 } else { 0.0 }),
        };
        out.extend([x, f, s]);
    }
    Ok(out)
}

/// Densities on `(0, x1_to] × (0, x2_to]`, row-major; the grids start one
/// step away from zero.
pub fn contour(m: &BivariateBlockModel, x1_to: f64, n1: usize, x2_to: f64, n2: usize) -> Result<Vec<f64>> {
    if n1 == 0 || n2 == 0 || !(x1_to > 0.0) || !(x2_to > 0.0) {
        return Err(Error::InvalidParameter("the grid needs positive extents and point counts".into()));
    }
    let axis = |to: f64, n: usize| (1..=n).map(move |i| to * i as f64 / n as f64);
    let pairs: Vec<(f64, f64)> = axis(x1_to, n1).flat_map(|a| axis(x2_to, n2).map(move |b| (a, b))).collect();
    m.densities(&pairs)
}

/// Sample, fitted model and likelihood trace of a simulate-then-fit run.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub sample: Vec<f64>,
    pub log_likelihood: Vec<f64>,
    pub pi: Vec<f64>,
    pub t: Vec<f64>,
    pub params: Vec<f64>,
}

/// Draws `n` values from `truth` and fits its family with `phases` phases.
pub fn simulate_and_fit(truth: &IphModel, n: usize, phases: usize, iterations: usize, seed: u64) -> Result<Fit> {
    if n == 0 {
        return Err(Error::InsufficientData("the sample is empty".into()));
    }
    let sample = draws(seed, n, |rng| truth.sample(rng));
    let data = sample.iter().map(|&x| Observation::exact(x)).collect::<Result<Vec<_>>>()?;
    let cfg = FitConfig {
        iterations,
        seed,
        ..Default::default()
    };
    let fit = fit_iph(&data, phases, truth.transform().family(), &cfg)?;
    Ok(Fit {
        sample,
        log_likelihood: fit.log_likelihood,
        pi: fit.model.base().pi().to_vec(),
        t: fit.model.base().matrix().as_slice().to_vec(),
        params: fit.model.transform().params(),
    })
}
