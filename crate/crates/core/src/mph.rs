//! Multivariate phase-type laws of MPH* type.
//!
//! A single jump process `(π, T)` runs until absorption. While it sits in
//! state `k`, coordinate `j` earns reward at rate `r_j(k)`; `Y^{(j)}` is the
//! total reward of coordinate `j`.
//!
//! [`BivariateBlockModel`] is the sub-class in which the process first moves
//! through a block that only rewards coordinate one and then through a block
//! that only rewards coordinate two. It has the explicit density
//!
//! ```text
//! f(y1, y2) = α exp(T11 y1) T12 exp(T22 y2) (-T22) e.
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::iph::{IphModel, Transform};
use crate::linalg::{exp_action, Lu, Matrix, SubIntensity, DEFAULT_EPS};
use crate::ph::{dot, PhModel, PROBABILITY_TOLERANCE};

/// Rewards at or below this value count as zero when extracting marginals.
pub const REWARD_THRESHOLD: f64 = 1e-9;

/// Tolerance on `R e = e`.
pub const REWARD_ROW_TOLERANCE: f64 = 1e-10;

/// MPH*(π, T, R).
#[derive(Debug, Clone, PartialEq)]
pub struct MphModel {
    pi: Vec<f64>,
    t: SubIntensity,
    r: Matrix,
    normalized: bool,
}

fn check_rewards(r: &Matrix, p: usize) -> Result<bool> {
    if r.rows() != p || r.cols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "reward matrix is {}x{} for {p} states",
            r.rows(),
            r.cols()
        )));
    }
    if r.as_slice().iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidModel("reward matrix has negative entries".into()));
    }
    Ok(r.row_sums().iter().all(|s| (s - 1.0).abs() <= REWARD_ROW_TOLERANCE))
}

impl MphModel {
    /// Model with reward rows summing to one.
    pub fn new(pi: Vec<f64>, t: Matrix, r: Matrix) -> Result<Self> {
        let m = Self::new_unnormalized(pi, t, r)?;
        if !m.normalized {
            return Err(Error::InvalidModel("reward matrix rows must sum to one".into()));
        }
        Ok(m)
    }

    /// Model with arbitrary non-negative rewards.
    pub fn new_unnormalized(pi: Vec<f64>, t: Matrix, r: Matrix) -> Result<Self> {
        let base = PhModel::new(pi, t)?;
        Self::from_base(&base, r)
    }

    pub fn from_base(base: &PhModel, r: Matrix) -> Result<Self> {
        let normalized = check_rewards(&r, base.dim())?;
        if (base.mass() - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidModel("initial probabilities must sum to one".into()));
        }
        Ok(MphModel {
            pi: base.pi().to_vec(),
            t: base.t().clone(),
            r,
            normalized,
        })
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    /// Number of coordinates `d`.
    pub fn coords(&self) -> usize {
        self.r.cols()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn t(&self) -> &SubIntensity {
        &self.t
    }

    pub fn rewards(&self) -> &Matrix {
        &self.r
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The absorption time of the underlying process.
    pub fn absorption(&self) -> PhModel {
        PhModel::from_parts(self.pi.clone(), self.t.clone()).expect("validated model")
    }

    /// Phase-type representation of coordinate `j` together with the states
    /// of the full model that it keeps.
    pub fn marginal_with_states(&self, j: usize) -> Result<(PhModel, Vec<usize>)> {
        if j >= self.coords() {
            return Err(Error::DimensionMismatch(format!("coordinate {j} of {}", self.coords())));
        }
        let p = self.dim();
        let (plus, zero): (Vec<usize>, Vec<usize>) =
            (0..p).partition(|&k| self.r[(k, j)] > REWARD_THRESHOLD);
        if plus.is_empty() {
            return Err(Error::DegenerateMarginal(j));
        }
        let t = self.t.matrix();
        let r_plus: Vec<f64> = plus.iter().map(|&k| self.r[(k, j)]).collect();
        let mut pi_j: Vec<f64> = plus.iter().map(|&k| self.pi[k]).collect();
        let mut core = t.select(&plus, &plus);
        if !zero.is_empty() {
            let t00 = t.select(&zero, &zero).scale(-1.0);
            let t0p = t.select(&zero, &plus);
            let tp0 = t.select(&plus, &zero);
            let w = Lu::new(&t00)?.solve(&t0p);
            let pi0: Vec<f64> = zero.iter().map(|&k| self.pi[k]).collect();
            for (a, b) in pi_j.iter_mut().zip(w.left_mul(&pi0)) {
                *a += b;
            }
            core = &core + &(&tp0 * &w);
        }
        let mut tj = Matrix::zeros(plus.len(), plus.len());
        for a in 0..plus.len() {
            for b in 0..plus.len() {
                tj[(a, b)] = core[(a, b)] / r_plus[a];
            }
        }
        for v in pi_j.iter_mut() {
            *v = v.max(0.0);
        }
        let total: f64 = pi_j.iter().sum();
        if total > 1.0 {
            pi_j.iter_mut().for_each(|v| *v /= total);
        }
        Ok((PhModel::from_parts(pi_j, SubIntensity::new(tj)?)?, plus))
    }

    /// Phase-type representation of coordinate `j`; its initial vector sums
    /// to one minus the atom at zero.
    pub fn marginal(&self, j: usize) -> Result<PhModel> {
        Ok(self.marginal_with_states(j)?.0)
    }

    /// `E[Y^{(i)} Y^{(j)}]` for all pairs.
    pub fn cross_moments(&self) -> Matrix {
        let d = self.coords();
        let lu = self.t.neg_lu();
        let a = lu.solve_row(&self.pi);
        let u: Vec<Vec<f64>> = (0..d).map(|j| lu.solve_vec(&self.r.col(j))).collect();
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..self.dim() {
                    s += a[k] * (self.r[(k, i)] * u[j][k] + self.r[(k, j)] * u[i][k]);
                }
                m[(i, j)] = s;
            }
        }
        m
    }

    pub fn mean(&self) -> Vec<f64> {
        let a = self.t.neg_lu().solve_row(&self.pi);
        (0..self.coords()).map(|j| dot(&a, &self.r.col(j))).collect()
    }

    pub fn covariance(&self) -> Matrix {
        let mean = self.mean();
        let mut c = self.cross_moments();
        for i in 0..self.coords() {
            for j in 0..self.coords() {
                c[(i, j)] -= mean[i] * mean[j];
            }
        }
        c
    }

    /// Mean vector and Pearson correlation matrix.
    pub fn mean_and_correlation(&self) -> (Vec<f64>, Matrix) {
        let cov = self.covariance();
        let d = self.coords();
        let mut corr = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let s = (cov[(i, i)] * cov[(j, j)]).sqrt();
                corr[(i, j)] = if i == j { 1.0 } else if s > 0.0 { cov[(i, j)] / s } else { 0.0 };
            }
        }
        (self.mean(), corr)
    }

    /// One draw of the reward vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with_absorption(rng).0
    }

    /// Reward vector and absorption time of the same path.
    pub fn sample_with_absorption<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let d = self.coords();
        let mut y = vec![0.0; d];
        let ph = PhModel::from_parts(self.pi.clone(), self.t.clone()).expect("validated model");
        let total = ph.walk(rng, |k, h| {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += self.r[(k, j)] * h;
            }
        });
        (y, total)
    }

    /// Real part of the dominant eigenvalue of each marginal generator.
    pub fn marginal_decay_rates(&self) -> Result<Vec<f64>> {
        (0..self.coords())
            .map(|j| Ok(self.marginal(j)?.t().dominant_real_eigenvalue()))
            .collect()
    }
}

/// Bivariate MPH* law with block-triangular generator
/// `[[T11, T12], [0, T22]]`, initial vector `(α, 0)` and rewards
/// `[[e, 0], [0, e]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateBlockModel {
    alpha: Vec<f64>,
    t11: SubIntensity,
    t12: Matrix,
    t22: SubIntensity,
}

impl BivariateBlockModel {
    pub fn new(alpha: Vec<f64>, t11: Matrix, t12: Matrix, t22: Matrix) -> Result<Self> {
        let p1 = t11.rows();
        let p2 = t22.rows();
        if t12.rows() != p1 || t12.cols() != p2 {
            return Err(Error::DimensionMismatch(format!(
                "T12 is {}x{}, expected {p1}x{p2}",
                t12.rows(),
                t12.cols()
            )));
        }
        let mut t12 = t12;
        for i in 0..p1 {
            for j in 0..p2 {
                let v = t12[(i, j)];
                if v < -crate::linalg::OFF_DIAGONAL_TOLERANCE {
                    return Err(Error::InvalidModel(format!("T12 entry ({i},{j}) = {v} is negative")));
                }
                t12[(i, j)] = v.max(0.0);
            }
        }
        let out = t12.row_sums();
        let sums = t11.row_sums();
        for i in 0..p1 {
            let scale = (-t11[(i, i)]).max(1.0);
            if (sums[i] + out[i]).abs() > 1e-10 * scale {
                return Err(Error::InvalidModel(format!(
                    "row {i} of the first block leaks {} outside the second block",
                    -(sums[i] + out[i])
                )));
            }
        }
        let t11 = SubIntensity::new(t11)?;
        let t22 = SubIntensity::new(t22)?;
        let total = alpha.iter().sum::<f64>();
        if alpha.len() != p1 {
            return Err(Error::DimensionMismatch("alpha length differs from T11".into()));
        }
        if alpha.iter().any(|a| !(*a >= 0.0)) || (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidModel("alpha must be a probability vector".into()));
        }
        Ok(BivariateBlockModel { alpha, t11, t12, t22 })
    }

    pub fn p1(&self) -> usize {
        self.alpha.len()
    }

    pub fn p2(&self) -> usize {
        self.t22.dim()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn t11(&self) -> &SubIntensity {
        &self.t11
    }

    pub fn t12(&self) -> &Matrix {
        &self.t12
    }

    pub fn t22(&self) -> &SubIntensity {
        &self.t22
    }

    /// The same law written as a general MPH* model.
    pub fn to_mph(&self) -> MphModel {
        let (p1, p2) = (self.p1(), self.p2());
        let t = Matrix::block(
            self.t11.matrix(),
            &self.t12,
            &Matrix::zeros(p2, p1),
            self.t22.matrix(),
        )
        .expect("block shapes agree");
        let mut r = Matrix::zeros(p1 + p2, 2);
        for k in 0..p1 + p2 {
            r[(k, usize::from(k >= p1))] = 1.0;
        }
        let mut pi = self.alpha.clone();
        pi.resize(p1 + p2, 0.0);
        let base = PhModel::from_parts(pi, SubIntensity::new(t).expect("block generator is valid"))
            .expect("valid initial vector");
        MphModel::from_base(&base, r).expect("block rewards are normalized")
    }

    /// `PH(α, T11)` for `j = 0` and `PH(α(-T11)⁻¹T12, T22)` for `j = 1`.
    pub fn marginal(&self, j: usize) -> Result<PhModel> {
        match j {
            0 => PhModel::from_parts(self.alpha.clone(), self.t11.clone()),
            1 => {
                let a = self.t11.neg_lu().solve_row(&self.alpha);
                let mut pi: Vec<f64> = self.t12.left_mul(&a).into_iter().map(|v| v.max(0.0)).collect();
                let total: f64 = pi.iter().sum();
                if total > 1.0 {
                    pi.iter_mut().for_each(|v| *v /= total);
                }
                PhModel::from_parts(pi, self.t22.clone())
            }
            _ => Err(Error::DimensionMismatch(format!("coordinate {j} of 2"))),
        }
    }

    /// Row vectors `α exp(T11 y1)` and column vectors `exp(T22 y2) c`, one
    /// row per pair.
    fn factors(&self, pairs: &[(f64, f64)], column: &[f64]) -> Result<(Matrix, Matrix)> {
        let ys1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let rows = exp_action(&self.alpha, self.t11.matrix(), &ys1, DEFAULT_EPS)?;
        let cols = exp_action(column, &self.t22.matrix().transpose(), &ys2, DEFAULT_EPS)?;
        Ok((rows, cols))
    }

    /// `a T12 c`.
    fn bilinear(&self, a: &[f64], c: &[f64]) -> f64 {
        a.iter().enumerate().map(|(k, ak)| ak * dot(self.t12.row(k), c)).sum()
    }

    pub fn density(&self, y1: f64, y2: f64) -> Result<f64> {
        Ok(self.densities(&[(y1, y2)])?[0])
    }

    /// Joint density at each pair.
    pub fn densities(&self, pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
        if let Some(&(a, b)) = pairs.iter().find(|(a, b)| !(*a > 0.0 && *b > 0.0)) {
            return Err(Error::domain(if a > 0.0 { b } else { a }, "joint density requires positive arguments"));
        }
        let (rows, cols) = self.factors(pairs, self.t22.exit())?;
        Ok((0..pairs.len()).map(|i| self.bilinear(rows.row(i), cols.row(i)).max(0.0)).collect())
    }

    pub fn survival(&self, y1: f64, y2: f64) -> Result<f64> {
        Ok(self.survivals(&[(y1, y2)])?[0])
    }

    /// `P(Y1 > y1, Y2 > y2) = α (-T11)⁻¹ exp(T11 y1) T12 exp(T22 y2) e`.
    pub fn survivals(&self, pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
        let ones = vec![1.0; self.p2()];
        let (rows, cols) = self.factors(pairs, &ones)?;
        let lu = self.t11.neg_lu();
        Ok((0..pairs.len())
            .map(|i| self.bilinear(&lu.solve_row(rows.row(i)), cols.row(i)).clamp(0.0, 1.0))
            .collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let (p1, t11, t12, t22) = (self.p1(), self.t11.matrix(), &self.t12, self.t22.matrix());
        let mut y = [0.0, 0.0];
        let mut state = pick(&self.alpha, rng.random()).unwrap_or(p1 - 1);
        loop {
            let (block, k) = if state < p1 { (0, state) } else { (1, state - p1) };
            let rate = if block == 0 { -t11[(k, k)] } else { -t22[(k, k)] };
            let u: f64 = rng.random();
            y[block] += -(-u).ln_1p() / rate;
            let u: f64 = rng.random::<f64>() * rate;
            let mut acc = 0.0;
            let mut next = None;
            if block == 0 {
                for l in 0..p1 + self.p2() {
                    if l == k {
                        continue;
                    }
                    acc += if l < p1 { t11[(k, l)] } else { t12[(k, l - p1)] };
                    if u < acc {
                        next = Some(l);
                        break;
                    }
                }
                // Every exit of the first block enters the second one.
                state = next.unwrap_or_else(|| {
                    (p1..p1 + self.p2()).rev().find(|&l| t12[(k, l - p1)] > 0.0).unwrap_or(p1)
                });
            } else {
                for l in 0..self.p2() {
                    if l == k {
                        continue;
                    }
                    acc += t22[(k, l)];
                    if u < acc {
                        next = Some(l);
                        break;
                    }
                }
                match next {
                    Some(l) => state = p1 + l,
                    None => return (y[0], y[1]),
                }
            }
        }
    }

    /// Real parts of the dominant eigenvalues of the two marginal generators.
    pub fn marginal_decay_rates(&self) -> [f64; 2] {
        [self.t11.dominant_real_eigenvalue(), self.t22.dominant_real_eigenvalue()]
    }
}

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

/// Base law of an inhomogeneous MPH* model.
#[derive(Debug, Clone, PartialEq)]
pub enum InhomBase {
    Mph(MphModel),
    Block(BivariateBlockModel),
}

/// `X^{(j)} = g_j(Y^{(j)})` with `Y` MPH* distributed.
#[derive(Debug, Clone, PartialEq)]
pub struct InhomMph {
    base: InhomBase,
    transforms: Vec<Transform>,
}

impl InhomMph {
    pub fn new(base: InhomBase, transforms: Vec<Transform>) -> Result<Self> {
        let d = match &base {
            InhomBase::Mph(m) => m.coords(),
            InhomBase::Block(_) => 2,
        };
        if transforms.len() != d {
            return Err(Error::DimensionMismatch(format!("{} transforms for {d} coordinates", transforms.len())));
        }
        for t in &transforms {
            t.validate()?;
        }
        Ok(InhomMph { base, transforms })
    }

    pub fn base(&self) -> &InhomBase {
        &self.base
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn coords(&self) -> usize {
        self.transforms.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let y = match &self.base {
            InhomBase::Mph(m) => m.sample(rng),
            InhomBase::Block(b) => {
                let (a, c) = b.sample(rng);
                vec![a, c]
            }
        };
        y.iter().zip(&self.transforms).map(|(&v, t)| t.from_base(v)).collect()
    }

    pub fn marginal(&self, j: usize) -> Result<IphModel> {
        let base = match &self.base {
            InhomBase::Mph(m) => m.marginal(j)?,
            InhomBase::Block(b) => b.marginal(j)?,
        };
        IphModel::new(base, self.transforms[j])
    }

    fn block(&self) -> Result<&BivariateBlockModel> {
        match &self.base {
            InhomBase::Block(b) => Ok(b),
            InhomBase::Mph(_) => Err(Error::Unsupported(
                "explicit joint densities exist only for bivariate block models".into(),
            )),
        }
    }

    pub fn density(&self, x1: f64, x2: f64) -> Result<f64> {
        Ok(self.log_densities(&[(x1, x2)])?[0].exp())
    }

    /// `log f_Y(g1⁻¹(x1), g2⁻¹(x2)) + log λ1(x1) + log λ2(x2)`.
    pub fn log_densities(&self, pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
        let b = self.block()?;
        let (g1, g2) = (&self.transforms[0], &self.transforms[1]);
        let mut base = Vec::with_capacity(pairs.len());
        let mut log_lambda = Vec::with_capacity(pairs.len());
        for &(x1, x2) in pairs {
            if !g1.in_support(x1) || !g2.in_support(x2) {
                return Err(Error::domain(if g1.in_support(x1) { x2 } else { x1 }, "outside the support"));
            }
            base.push((g1.to_base(x1)?, g2.to_base(x2)?));
            log_lambda.push(g1.log_intensity(x1)? + g2.log_intensity(x2)?);
        }
        let f = b.densities(&base)?;
        Ok(f.iter().zip(log_lambda).map(|(v, l)| v.ln() + l).collect())
    }

    /// Joint density through each coordinate's matrix function, for example
    /// `α (x1/β1+1)^{T11-I} T12 (x2/β2+1)^{T22-I} (-T22)e / (β1β2)` for the
    /// matrix-Pareto pair.
    pub fn density_closed_form(&self, x1: f64, x2: f64) -> Result<f64> {
        let b = self.block()?;
        let (m1, l1) = self.transforms[0].matrix_kernel(b.t11(), x1)?;
        let (m2, l2) = self.transforms[1].matrix_kernel(b.t22(), x2)?;
        let row = b.t12().left_mul(&m1.left_mul(b.alpha()));
        Ok(dot(&m2.left_mul(&row), b.t22().exit()) * l1 * l2)
    }

    /// Joint survival function for increasing transforms.
    pub fn survival(&self, x1: f64, x2: f64) -> Result<f64> {
        let b = self.block()?;
        if !self.transforms.iter().all(Transform::is_increasing) {
            return Err(Error::Unsupported("joint survival with a decreasing transform".into()));
        }
        b.survival(self.transforms[0].to_base(x1)?, self.transforms[1].to_base(x2)?)
    }

    /// Tail index `-Re λ_max` of every matrix-Pareto marginal; `None` for the
    /// other families.
    pub fn tail_indices(&self) -> Result<Vec<Option<f64>>> {
        let rates: Vec<f64> = match &self.base {
            InhomBase::Mph(m) => m.marginal_decay_rates()?,
            InhomBase::Block(b) => b.marginal_decay_rates().to_vec(),
        };
        Ok(rates
            .into_iter()
            .zip(&self.transforms)
            .map(|(r, t)| matches!(t, Transform::Pareto { .. }).then_some(-r))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    pub(crate) fn example() -> MphModel {
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

    fn product(a: f64, b: f64) -> BivariateBlockModel {
        BivariateBlockModel::new(
            vec![1.0],
            Matrix::from_rows(&[[-a]]).unwrap(),
            Matrix::from_rows(&[[a]]).unwrap(),
            Matrix::from_rows(&[[-b]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn example_moments() {
        let (mean, corr) = example().mean_and_correlation();
        assert!((mean[0] - 0.5).abs() < 1e-12);
        assert!((mean[1] - 0.9609).abs() < 1e-3);
        assert!((corr[(0, 1)] - 0.1148).abs() < 1e-3);
    }

    #[test]
    fn full_reward_marginal_is_unchanged() {
        let base = PhModel::new(
            vec![0.3, 0.7],
            Matrix::from_rows(&[[-2.0, 1.0], [0.5, -1.0]]).unwrap(),
        )
        .unwrap();
        let m = MphModel::from_base(&base, Matrix::from_rows(&[[1.0], [1.0]]).unwrap()).unwrap();
        assert_eq!(m.marginal(0).unwrap(), base);
    }

    #[test]
    fn zero_rewards_fold_into_marginal() {
        let m = example();
        let m1 = m.marginal(0).unwrap();
        assert_eq!(m1.dim(), 2);
        assert!((m1.mean() - 0.5).abs() < 1e-12);
        let m2 = m.marginal(1).unwrap();
        assert!((m2.mean() - m.mean()[1]).abs() < 1e-12);
        let degenerate = MphModel::new_unnormalized(
            vec![1.0],
            Matrix::from_rows(&[[-1.0]]).unwrap(),
            Matrix::from_rows(&[[1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(degenerate.marginal(1), Err(Error::DegenerateMarginal(1)));
    }

    #[test]
    fn reward_normalization_is_checked() {
        let t = Matrix::from_rows(&[[-1.0]]).unwrap();
        assert!(MphModel::new(vec![1.0], t.clone(), Matrix::from_rows(&[[0.5, 0.2]]).unwrap()).is_err());
        let m = MphModel::new_unnormalized(vec![1.0], t, Matrix::from_rows(&[[0.5, 0.2]]).unwrap()).unwrap();
        assert!(!m.is_normalized());
    }

    #[test]
    fn samples_add_up_to_absorption() {
        let m = example();
        let mut rng = stream(3, 0);
        for _ in 0..1000 {
            let (y, total) = m.sample_with_absorption(&mut rng);
            assert!((y[0] + y[1] - total).abs() <= 1e-12 * total.max(1.0));
        }
    }

    #[test]
    fn product_block_density() {
        let b = product(1.0, 2.0);
        assert!((b.density(1.0, 1.0).unwrap() - 2.0 * (-3.0f64).exp()).abs() < 1e-14);
        assert!((b.survival(0.5, 0.25).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        assert!((b.survival(0.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn block_marginals() {
        let m = example();
        let b = BivariateBlockModel::new(
            vec![0.15, 0.85],
            Matrix::from_rows(&[[-2.0, 0.0], [9.0, -11.0]]).unwrap(),
            Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0]]).unwrap(),
            Matrix::from_rows(&[[-1.0, 0.5], [0.0, -5.0]]).unwrap(),
        )
        .unwrap();
        let mph_second = m.marginal(1).unwrap();
        let block_second = b.marginal(1).unwrap();
        for y in [0.1, 0.7, 2.0] {
            let a = mph_second.density(y).unwrap();
            let c = block_second.density(y).unwrap();
            assert!((a - c).abs() < 1e-12);
        }
        assert_eq!(b.to_mph(), m);
        assert!((b.survival(0.0, 0.8).unwrap() - block_second.survival(0.8).unwrap()).abs() < 1e-13);
        assert!((b.survival(0.8, 0.0).unwrap() - b.marginal(0).unwrap().survival(0.8).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn block_leak_is_rejected() {
        let err = BivariateBlockModel::new(
            vec![1.0],
            Matrix::from_rows(&[[-2.0]]).unwrap(),
            Matrix::from_rows(&[[1.0]]).unwrap(),
            Matrix::from_rows(&[[-1.0]]).unwrap(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn independent_paretos() {
        let m = InhomMph::new(
            InhomBase::Block(product(2.0, 3.0)),
            vec![Transform::Pareto { beta: 1.0 }, Transform::Pareto { beta: 1.0 }],
        )
        .unwrap();
        let (x1, x2) = (0.7, 2.5);
        let exact = 2.0 * (1.0f64 + x1).powf(-3.0) * 3.0 * (1.0f64 + x2).powf(-4.0);
        assert!((m.density(x1, x2).unwrap() - exact).abs() < 1e-13);
        assert!((m.density_closed_form(x1, x2).unwrap() - exact).abs() < 1e-13);
        let tails = m.tail_indices().unwrap();
        assert!((tails[0].unwrap() - 2.0).abs() < 1e-9);
        assert!((tails[1].unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn density_needs_block_base() {
        let m = InhomMph::new(InhomBase::Mph(example()), vec![Transform::Identity; 2]).unwrap();
        assert!(matches!(m.density(1.0, 1.0), Err(Error::Unsupported(_))));
        let x = m.sample(&mut stream(1, 0));
        assert_eq!(x.len(), 2);
    }
}
