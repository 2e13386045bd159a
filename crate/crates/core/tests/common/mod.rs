//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use iphfit::em::Observation;
use iphfit::rng::{draws, Stream};
use iphfit::{BivariateBlockModel, Matrix, MphModel};
use nalgebra::DMatrix;
use rand::Rng;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

pub fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}

/// `exp(A y)` for `A = V diag(d) V⁻¹`.
pub fn expm_eigen(v: &DMatrix<f64>, d: &[f64], y: f64) -> DMatrix<f64> {
    let n = d.len();
    let e = DMatrix::from_fn(n, n, |i, j| if i == j { (d[i] * y).exp() } else { 0.0 });
    let vinv = v.clone().try_inverse().expect("invertible eigenvector matrix");
    v * e * vinv
}

/// `exp(T y)` by nalgebra's Padé approximation.
pub fn expm_pade(t: &Matrix, y: f64) -> DMatrix<f64> {
    (to_nalgebra(t) * y).exp()
}

/// `∫₀ʸ exp(T(y-u)) a b exp(T u) du` entry by entry.
pub fn van_loan_quadrature(t: &Matrix, a: &[f64], b: &[f64], y: f64, tol: f64) -> DMatrix<f64> {
    let n = a.len();
    let av = DMatrix::from_column_slice(n, 1, a);
    let bv = DMatrix::from_row_slice(1, n, b);
    let integrand = |u: f64| expm_pade(t, y - u) * &av * &bv * expm_pade(t, u);
    DMatrix::from_fn(n, n, |i, j| simpson(&|u| integrand(u)[(i, j)], 0.0, y, tol))
}

/// Marshall–Olkin pairs `(min(E1, E12), min(E2, E12))`.
pub fn marshall_olkin(l1: f64, l2: f64, l12: f64, n: usize, seed: u64) -> Vec<(f64, f64)> {
    draws(seed, n, |rng: &mut Stream| {
        let e = |rng: &mut Stream, rate: f64| -(1.0 - rng.random::<f64>()).ln() / rate;
        let (e1, e2, e12) = (e(rng, l1), e(rng, l2), e(rng, l12));
        (e1.min(e12), e2.min(e12))
    })
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn exact(xs: &[f64]) -> Vec<Observation> {
    xs.iter().map(|&x| Observation::exact(x).unwrap()).collect()
}

pub fn rows(pairs: &[(f64, f64)]) -> Vec<Vec<Observation>> {
    pairs
        .iter()
        .map(|&(a, b)| vec![Observation::exact(a).unwrap(), Observation::exact(b).unwrap()])
        .collect()
}

/// Pearson correlation of two samples.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Complete-data statistics of one simulated path: starts, occupation,
/// transitions (row-major) and exits.
pub struct PathStats {
    pub absorption: f64,
    pub starts: Vec<f64>,
    pub occupation: Vec<f64>,
    pub transitions: Vec<f64>,
    pub exits: Vec<f64>,
}

/// Simulates the jump chain of `PH(π, T)` directly from the rates.
pub fn simulate_path<R: Rng>(pi: &[f64], t: &Matrix, rng: &mut R) -> PathStats {
    let p = pi.len();
    let mut s = PathStats {
        absorption: 0.0,
        starts: vec![0.0; p],
        occupation: vec![0.0; p],
        transitions: vec![0.0; p * p],
        exits: vec![0.0; p],
    };
    let pick = |weights: &[f64], u: f64| {
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        for (k, w) in weights.iter().enumerate() {
            acc += w / total;
            if u < acc {
                return k;
            }
        }
        weights.len() - 1
    };
    let mut k = pick(pi, rng.random());
    s.starts[k] = 1.0;
    loop {
        let rate = -t[(k, k)];
        let hold = -(1.0 - rng.random::<f64>()).ln() / rate;
        s.occupation[k] += hold;
        s.absorption += hold;
        let mut w: Vec<f64> = (0..p).map(|l| if l == k { 0.0 } else { t[(k, l)] }).collect();
        let exit = -(0..p).map(|l| t[(k, l)]).sum::<f64>();
        w.push(exit.max(0.0));
        let next = pick(&w, rng.random());
        if next == p {
            s.exits[k] = 1.0;
            return s;
        }
        s.transitions[k * p + next] += 1.0;
        k = next;
    }
}

/// Eigenvalues and eigenvectors (columns) of a matrix with real spectrum;
/// each eigenvector spans the null space of `A - λI`.
pub fn eigen(a: &Matrix) -> (DMatrix<f64>, Vec<f64>) {
    let m = to_nalgebra(a);
    let n = m.nrows();
    let values: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            assert!(z.im.abs() < 1e-10, "complex eigenvalue {z}");
            z.re
        })
        .collect();
    let mut v = DMatrix::zeros(n, n);
    for (k, &l) in values.iter().enumerate() {
        let shifted = &m - DMatrix::identity(n, n) * l;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("right singular vectors");
        let (smallest, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        for i in 0..n {
            v[(i, k)] = vt[(smallest, i)];
        }
    }
    (v, values)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// `∫₀^∞ f` by the substitution `y = u/(1-u)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: &F, tol: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let y = u / (1.0 - u);
        f(y) / (1.0 - u).powi(2)
    };
    simpson(&g, 0.0, 1.0, tol)
}

/// Four-state MPH* example with block rewards.
pub fn mph_example() -> MphModel {
    MphModel::new(
        vec![0.15, 0.85, 0.0, 0.0],
        Matrix::from_rows(&[
            [-2.0, 0.0, 2.0, 0.0],
            [9.0, -11.0, 0.0, 2.0],
            [0.0, 0.0, -1.0, 0.5],
            [0.0, 0.0, 0.0, -5.0],
        ])
        .unwrap(),
        Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap(),
    )
    .unwrap()
}

/// The same law as a bivariate block model.
pub fn block_example() -> BivariateBlockModel {
    BivariateBlockModel::new(
        vec![0.15, 0.85],
        Matrix::from_rows(&[[-2.0, 0.0], [9.0, -11.0]]).unwrap(),
        Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0]]).unwrap(),
        Matrix::from_rows(&[[-1.0, 0.5], [0.0, -5.0]]).unwrap(),
    )
    .unwrap()
}
