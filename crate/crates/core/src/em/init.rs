//! Random starting values.

use rand::Rng;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::mph::BivariateBlockModel;
use crate::ph::PhModel;

fn dirichlet<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|v| v / total).collect()
}

/// `π ~ Dirichlet(1, …, 1)`, off-diagonal and exit rates `~ U(0, 1)`, then
/// `T` rescaled so that the mean equals `mean`.
pub(crate) fn random_ph<R: Rng>(p: usize, mean: f64, rng: &mut R) -> Result<PhModel> {
    let pi = dirichlet(p, rng);
    let mut t = Matrix::zeros(p, p);
    for k in 0..p {
        let mut out = 0.0;
        for l in 0..p {
            if l != k {
                let v: f64 = rng.random();
                t[(k, l)] = v;
                out += v;
            }
        }
        // Keep every exit rate positive so the draw is always a valid model.
        let exit = rng.random::<f64>().max(1e-3);
        t[(k, k)] = -(out + exit);
    }
    let unscaled = PhModel::new(pi.clone(), t.clone())?;
    let c = unscaled.mean() / mean;
    PhModel::new(pi, t.scale(c))
}

/// Block model with random magnitudes on the block pattern, rescaled so the
/// marginal means equal `means`.
pub(crate) fn random_block<R: Rng>(p1: usize, p2: usize, means: [f64; 2], rng: &mut R) -> Result<BivariateBlockModel> {
    let alpha = dirichlet(p1, rng);
    let mut t11 = Matrix::zeros(p1, p1);
    let mut t12 = Matrix::zeros(p1, p2);
    for k in 0..p1 {
        let mut out = 0.0;
        for l in 0..p1 {
            if l != k {
                let v: f64 = rng.random();
                t11[(k, l)] = v;
                out += v;
            }
        }
        for l in 0..p2 {
            let v = rng.random::<f64>().max(1e-3);
            t12[(k, l)] = v;
            out += v;
        }
        t11[(k, k)] = -out;
    }
    let mut t22 = Matrix::zeros(p2, p2);
    for k in 0..p2 {
        let mut out = 0.0;
        for l in 0..p2 {
            if l != k {
                let v: f64 = rng.random();
                t22[(k, l)] = v;
                out += v;
            }
        }
        t22[(k, k)] = -(out + rng.random::<f64>().max(1e-3));
    }
    let unscaled = BivariateBlockModel::new(alpha.clone(), t11.clone(), t12.clone(), t22.clone())?;
    let c1 = unscaled.marginal(0)?.mean() / means[0];
    let c2 = unscaled.marginal(1)?.mean() / means[1];
    BivariateBlockModel::new(alpha, t11.scale(c1), t12.scale(c1), t22.scale(c2))
}

/// Weighted mean of positive starting values; one if there are none.
pub(crate) fn positive_mean(values: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut w) = (0.0, 0.0);
    for (v, weight) in values {
        if v > 0.0 && v.is_finite() {
            s += v * weight;
            w += weight;
        }
    }
    if w > 0.0 && s > 0.0 {
        s / w
    } else {
        1.0
    }
}
