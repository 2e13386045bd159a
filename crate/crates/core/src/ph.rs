//! Homogeneous phase-type distributions `PH(π, T)`: the absorption time of a
//! Markov jump process with transient generator `T` started from `π`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{exp_action, Matrix, SubIntensity, DEFAULT_EPS};

/// Tolerance on `Σ π_k = 1` for directly constructed models.
pub const PROBABILITY_TOLERANCE: f64 = 1e-8;

/// A phase-type law. When `Σ π_k < 1` the missing mass is an atom at zero;
/// [`PhModel::density`] and [`PhModel::survival`] describe the absolutely
/// continuous part only.
#[derive(Debug, Clone, PartialEq)]
pub struct PhModel {
    pi: Vec<f64>,
    t: SubIntensity,
}

/// One simulated path of the underlying jump process.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub holding: Vec<f64>,
    pub absorption: f64,
}

fn check_pi(pi: &[f64], dim: usize) -> Result<f64> {
    if pi.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "initial vector of length {} for {dim} phases",
            pi.len()
        )));
    }
    if let Some(bad) = pi.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidModel(format!("initial probability {bad} is not in [0, 1]")));
    }
    Ok(pi.iter().sum())
}

impl PhModel {
    /// Model with `Σ π_k = 1`.
    pub fn new(pi: Vec<f64>, t: Matrix) -> Result<Self> {
        let t = SubIntensity::new(t)?;
        let total = check_pi(&pi, t.dim())?;
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidModel(format!("initial probabilities sum to {total}")));
        }
        Ok(PhModel { pi, t })
    }

    /// Model whose initial vector may sum to less than one.
    pub fn with_defect(pi: Vec<f64>, t: Matrix) -> Result<Self> {
        Self::from_parts(pi, SubIntensity::new(t)?)
    }

    pub fn from_parts(pi: Vec<f64>, t: SubIntensity) -> Result<Self> {
        let total = check_pi(&pi, t.dim())?;
        if total > 1.0 + PROBABILITY_TOLERANCE {
            return Err(Error::InvalidModel(format!("initial probabilities sum to {total}")));
        }
        Ok(PhModel { pi, t })
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn t(&self) -> &SubIntensity {
        &self.t
    }

    pub fn matrix(&self) -> &Matrix {
        self.t.matrix()
    }

    pub fn exit(&self) -> &[f64] {
        self.t.exit()
    }

    /// Probability of the absolutely continuous part.
    pub fn mass(&self) -> f64 {
        self.pi.iter().sum()
    }

    /// Size of the atom at zero.
    pub fn atom(&self) -> f64 {
        (1.0 - self.mass()).max(0.0)
    }

    /// `π exp(T y)` at each point of `ys`, one row per point.
    pub fn state_probabilities(&self, ys: &[f64]) -> Result<Matrix> {
        if let Some(&bad) = ys.iter().find(|y| !(**y >= 0.0) || !y.is_finite()) {
            return Err(Error::domain(bad, "phase-type argument must be finite and non-negative"));
        }
        exp_action(&self.pi, self.matrix(), ys, DEFAULT_EPS)
    }

    /// `f(y) = π exp(T y) t` for `y > 0`.
    pub fn density(&self, y: f64) -> Result<f64> {
        Ok(self.densities(&[y])?[0])
    }

    pub fn densities(&self, ys: &[f64]) -> Result<Vec<f64>> {
        if let Some(&bad) = ys.iter().find(|y| !(**y > 0.0)) {
            return Err(Error::domain(bad, "phase-type density requires y > 0"));
        }
        let exit = self.exit();
        let rows = self.state_probabilities(ys)?;
        Ok((0..ys.len()).map(|i| dot(rows.row(i), exit).max(0.0)).collect())
    }

    /// `S(y) = π exp(T y) e` for `y ≥ 0`.
    pub fn survival(&self, y: f64) -> Result<f64> {
        Ok(self.survivals(&[y])?[0])
    }

    pub fn survivals(&self, ys: &[f64]) -> Result<Vec<f64>> {
        let rows = self.state_probabilities(ys)?;
        Ok((0..ys.len()).map(|i| rows.row(i).iter().sum::<f64>().clamp(0.0, 1.0)).collect())
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        Ok(1.0 - self.survival(y)?)
    }

    /// `E[Y^n] = n! π (-T)^{-n} e`.
    pub fn moment(&self, n: u32) -> f64 {
        let lu = self.t.neg_lu();
        let mut x = vec![1.0; self.dim()];
        let mut factorial = 1.0;
        for k in 1..=n {
            x = lu.solve_vec(&x);
            factorial *= k as f64;
        }
        factorial * dot(&self.pi, &x)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    /// Quantile of the absorption time by bisection on the survival function.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::domain(q, "quantile level must lie in [0, 1)"));
        }
        if q <= self.atom() {
            return Ok(0.0);
        }
        let target = 1.0 - q;
        let mut lo = 0.0;
        let mut hi = self.mean().max(f64::MIN_POSITIVE);
        while self.survival(hi)? > target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::domain(q, "quantile beyond floating-point range"));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Runs the jump process once, calling `visit(state, holding_time)` for
    /// every visit, and returns the absorption time (zero for the atom).
    pub fn walk<R, F>(&self, rng: &mut R, mut visit: F) -> f64
    where
        R: Rng + ?Sized,
        F: FnMut(usize, f64),
    {
        let p = self.dim();
        let t = self.matrix();
        let exit = self.exit();
        let u: f64 = rng.random();
        let mut state = match pick(&self.pi, u) {
            Some(k) => k,
            None => return 0.0,
        };
        let mut total = 0.0;
        loop {
            let rate = -t[(state, state)];
            let u: f64 = rng.random();
            let hold = -(-u).ln_1p() / rate;
            total += hold;
            visit(state, hold);
            let u: f64 = rng.random::<f64>() * rate;
            let mut acc = 0.0;
            let mut next = None;
            for l in 0..p {
                if l == state {
                    continue;
                }
                acc += t[(state, l)];
                if u < acc {
                    next = Some(l);
                    break;
                }
            }
            state = match next {
                Some(l) => l,
                None if exit[state] > 0.0 => return total,
                // Rounding pushed u past the last transition of a state
                // without exit.
                None => (0..p).rev().find(|&l| l != state && t[(state, l)] > 0.0).unwrap(),
            };
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory {
        let mut tr = Trajectory::default();
        tr.absorption = self.walk(rng, |k, h| {
            tr.states.push(k);
            tr.holding.push(h);
        });
        tr
    }

    /// Absorption time only.
    pub fn sample_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.walk(rng, |_, _| {})
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index `k` with `Σ_{l<k} w_l ≤ u < Σ_{l≤k} w_l`, or `None` past the total.
fn pick(weights: &[f64], u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Some(k);
        }
    }
    None
}
