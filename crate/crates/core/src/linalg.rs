//! Dense real matrices and the matrix-exponential kernels used everywhere
//! else in the crate.
//!
//! The exponential is computed by uniformization: for `φ = max_k |a_kk|`
//! and `P = I + A/φ`,
//!
//! ```text
//! exp(A y) = Σ_n  e^{-φy} (φy)^n / n!  Pⁿ
//! ```
//!
//! The series is evaluated at `y / 2^m` with `m` the smallest integer making
//! `φ y / 2^m < 1`, then squared `m` times. Integrals of the form
//! `∫₀^y e^{T(y-u)} a b e^{Tu} du` are read off the upper-right block of the
//! exponential of `[[T, a b], [0, T]]`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

/// Default truncation error for the uniformization series.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Off-diagonal entries down to this value are clamped to zero when
/// validating a sub-intensity matrix.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Largest accepted (positive) row sum of a sub-intensity matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-10;

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major storage. Every entry must be finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "matrix entry {bad} is not finite"
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(n_rows, n_cols, data)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Single-column matrix.
    pub fn column(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diag(&self) -> f64 {
        self.diag().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// `A v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A` for a row vector `v`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "left_mul dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        let mut out = Matrix::zeros(nr, nc);
        for i in 0..nr {
            out.data[i * nc..(i + 1) * nc]
                .copy_from_slice(&self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + nc]);
        }
        out
    }

    /// Rows and columns picked by index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.data[a * cols.len() + b] = self[(i, j)];
            }
        }
        out
    }

    /// Assembles `[[a, b], [c, d]]`.
    pub fn block(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Result<Self> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::DimensionMismatch("incompatible blocks".into()));
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j] = match (i < a.rows, j < a.cols) {
                    (true, true) => a[(i, j)],
                    (true, false) => b[(i, j - a.cols)],
                    (false, true) => c[(i - a.rows, j)],
                    (false, false) => d[(i - a.rows, j - a.cols)],
                };
            }
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `out = a * b` for square `n x n` row-major buffers.
fn square_mul_into(n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        let out_row = &mut out[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b[k * n..(k + 1) * n];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
}

impl Mul<&Matrix> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matrix product {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += aik * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add<&Matrix> for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&Matrix> for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let tol = 1e-13 * a.norm_inf();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, piv_abs) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(piv_abs > tol) || piv_abs == 0.0 {
                return Err(Error::SingularMatrix);
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    /// Solves `A x = b`.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `x A = b` for a row vector `x`.
    pub fn solve_row(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ w = b, then Lᵀ z = w, then x = Pᵀ z.
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = w[k];
        }
        x
    }

    pub fn solve(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows, self.n);
        let mut out = Matrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve_vec(&b.col(j));
            for i in 0..b.rows {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "solve with A {}x{} and B {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(Lu::new(a)?.solve(b))
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    solve(a, &Matrix::identity(a.rows))
}

/// Matrix exponential `exp(A y)` by uniformization with scaling and squaring.
///
/// `eps` bounds the truncation error of the series. The series tail is
/// driven below `eps / 2^m` so the bound survives the `m` squarings.
pub fn expm(a: &Matrix, y: f64, eps: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "exponential of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::domain(y, "exponential time must be finite and non-negative"));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("truncation eps {eps} must be positive")));
    }
    let n = a.rows;
    if y == 0.0 || n == 0 {
        return Ok(Matrix::identity(n));
    }
    let mut phi = a.max_abs_diag();
    if phi == 0.0 {
        phi = a.norm_inf();
        if phi == 0.0 {
            return Ok(Matrix::identity(n));
        }
    }

    let mut squarings = 0i32;
    let mut h = y;
    while phi * h >= 1.0 {
        h *= 0.5;
        squarings += 1;
    }

    let mut p = a.scale(1.0 / phi);
    for i in 0..n {
        p.data[i * n + i] += 1.0;
    }
    let lam = phi * h;
    let c = lam * p.norm_inf().max(1.0);
    let target = (eps * 0.5f64.powi(squarings)).max(f64::MIN_POSITIVE);
    let weight0 = (-lam).exp();

    // Smallest M with e^{-λ} Σ_{k>M} c^k/k! <= target, using the geometric
    // bound on the tail once c/(M+2) < 1/2.
    let mut terms = 0usize;
    let mut term = 1.0;
    loop {
        let next = term * c / (terms + 1) as f64;
        let ratio = c / (terms + 2) as f64;
        if next == 0.0 || (ratio < 0.5 && weight0 * next / (1.0 - ratio) <= target) {
            break;
        }
        term = next;
        terms += 1;
        if terms >= 100_000 {
            break;
        }
    }

    let mut result = Matrix::identity(n).scale(weight0);
    let mut power = Matrix::identity(n);
    let mut scratch = vec![0.0; n * n];
    let mut weight = weight0;
    for k in 1..=terms {
        square_mul_into(n, &power.data, &p.data, &mut scratch);
        std::mem::swap(&mut power.data, &mut scratch);
        weight *= lam / k as f64;
        for (r, v) in result.data.iter_mut().zip(&power.data) {
            *r += weight * v;
        }
    }
    for _ in 0..squarings {
        square_mul_into(n, &result.data, &result.data, &mut scratch);
        std::mem::swap(&mut result.data, &mut scratch);
    }
    Ok(result)
}

/// Blocks of `exp([[T, a b], [0, T]] y)`.
#[derive(Debug, Clone)]
pub struct VanLoan {
    /// `exp(T y)`.
    pub exp: Matrix,
    /// `∫₀^y exp(T(y-u)) a b exp(T u) du`.
    pub integral: Matrix,
}

/// Exponential and convolution integral for the rank-one coupling `a b`
/// (column `a`, row `b`).
pub fn van_loan(t: &Matrix, a: &[f64], b: &[f64], y: f64, eps: f64) -> Result<VanLoan> {
    let p = t.rows;
    if !t.is_square() || a.len() != p || b.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "Van Loan block with T {}x{}, column {}, row {}",
            t.rows,
            t.cols,
            a.len(),
            b.len()
        )));
    }
    let q = 2 * p;
    let mut block = Matrix::zeros(q, q);
    for i in 0..p {
        for j in 0..p {
            block.data[i * q + j] = t[(i, j)];
            block.data[(i + p) * q + j + p] = t[(i, j)];
            block.data[i * q + j + p] = a[i] * b[j];
        }
    }
    let e = expm(&block, y, eps)?;
    Ok(VanLoan {
        exp: e.submatrix(p, p, p, p),
        integral: e.submatrix(0, p, p, p),
    })
}

/// `G(y; π, T) = ∫₀^y e^{T(y-u)} t π e^{Tu} du` with `t = -T e`.
pub fn van_loan_g(pi: &[f64], t: &Matrix, y: f64) -> Result<Matrix> {
    if !t.is_square() || pi.len() != t.rows {
        return Err(Error::DimensionMismatch(format!(
            "pi of length {} with T {}x{}",
            pi.len(),
            t.rows,
            t.cols
        )));
    }
    let exit: Vec<f64> = t.row_sums().iter().map(|s| -s).collect();
    Ok(van_loan(t, &exit, pi, y, DEFAULT_EPS)?.integral)
}

/// Largest `φ Δ` handled by a single uniformization step in [`exp_action_path`].
const PATH_STEP: f64 = 8.0;

/// `v ← v Σ_k Pois(k; λ) P^k`, truncated once the Poisson tail is below
/// `eps`. `power` and `next` are scratch space of the length of `v`.
fn poisson_step(v: &mut [f64], p: &Matrix, lam: f64, eps: f64, power: &mut Vec<f64>, next: &mut Vec<f64>) {
    let w0 = (-lam).exp();
    power.clear();
    power.extend_from_slice(v);
    next.clear();
    next.resize(v.len(), 0.0);
    let mut weight = w0;
    let mut cumulative = w0;
    v.iter_mut().for_each(|x| *x *= w0);
    let mut k = 0usize;
    while 1.0 - cumulative > eps && k < 10_000 {
        k += 1;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, &pi) in power.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (o, pij) in next.iter_mut().zip(p.row(i)) {
                *o += pi * pij;
            }
        }
        std::mem::swap(power, next);
        weight *= lam / k as f64;
        cumulative += weight;
        for (a, x) in v.iter_mut().zip(power.iter()) {
            *a += weight * x;
        }
    }
}

/// Row vectors `v exp(T y_i)` for a sub-intensity matrix `T` and
/// non-decreasing times `ys`.
///
/// Moves from one time to the next with vector-matrix products only. Because
/// `P = I + T/φ` is non-negative with row sums at most one, the truncation
/// error of every step is bounded by `eps` times the current `‖v‖₁`, so small
/// values keep their relative accuracy far into the tail. Long gaps are
/// crossed in steps of the precomputed non-negative kernel `exp(T h)`,
/// `φ h = 8`, which carries the same bound.
pub fn exp_action_path(v: &[f64], t: &Matrix, ys: &[f64], eps: f64) -> Result<Matrix> {
    let n = t.rows;
    if !t.is_square() || v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "row vector of length {} with a {}x{} matrix",
            v.len(),
            t.rows,
            t.cols
        )));
    }
    let phi = t.max_abs_diag();
    let mut p = if phi > 0.0 { t.scale(1.0 / phi) } else { Matrix::zeros(n, n) };
    for i in 0..n {
        p.data[i * n + i] += 1.0;
    }
    let mut kernel: Option<Matrix> = None;
    let (mut power, mut next) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut out = Vec::with_capacity(ys.len() * n);
    let mut current = v.to_vec();
    let mut at = 0.0;
    for &y in ys {
        if !(y >= at) || !y.is_finite() {
            return Err(Error::domain(y, "path times must be finite, non-negative and sorted"));
        }
        let lam_total = phi * (y - at);
        if lam_total > 500.0 * PATH_STEP {
            current = expm(t, y - at, eps)?.left_mul(&current);
        } else if lam_total > 0.0 {
            let full = (lam_total / PATH_STEP).floor();
            if full >= 1.0 {
                let k = kernel.get_or_insert_with(|| {
                    let rows: Vec<Vec<f64>> = (0..n)
                        .map(|i| {
                            let mut e = vec![0.0; n];
                            e[i] = 1.0;
                            poisson_step(&mut e, &p, PATH_STEP, eps, &mut power, &mut next);
                            e
                        })
                        .collect();
                    Matrix::from_rows(&rows).expect("finite kernel")
                });
                for _ in 0..full as usize {
                    current = k.left_mul(&current);
                }
            }
            let rest = lam_total - full * PATH_STEP;
            if rest > 0.0 {
                poisson_step(&mut current, &p, rest, eps, &mut power, &mut next);
            }
        }
        at = y;
        out.extend_from_slice(&current);
    }
    Ok(Matrix {
        rows: ys.len(),
        cols: n,
        data: out,
    })
}

/// Row vectors `v exp(T y_i)` at times in any order; row `i` belongs to
/// `ys[i]`.
pub fn exp_action(v: &[f64], t: &Matrix, ys: &[f64], eps: f64) -> Result<Matrix> {
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let path = exp_action_path(v, t, &sorted, eps)?;
    let n = path.cols;
    let mut data = vec![0.0; path.data.len()];
    for (r, &i) in order.iter().enumerate() {
        data[i * n..(i + 1) * n].copy_from_slice(path.row(r));
    }
    Ok(Matrix {
        rows: ys.len(),
        cols: n,
        data,
    })
}

/// Sub-intensity matrix `T` together with its exit vector `t = -T e`.
#[derive(Clone, PartialEq)]
pub struct SubIntensity {
    matrix: Matrix,
    exit: Vec<f64>,
}

impl fmt::Debug for SubIntensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.matrix.fmt(f)
    }
}

impl SubIntensity {
    /// Validates `matrix` as a sub-intensity matrix.
    ///
    /// Off-diagonal entries in `[-1e-12, 0)` are clamped to zero and row sums
    /// up to `1e-10` are accepted; the matrix must be invertible.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "sub-intensity matrix must be square, got {}x{}",
                matrix.rows, matrix.cols
            )));
        }
        if matrix.rows == 0 {
            return Err(Error::InvalidModel("empty sub-intensity matrix".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidModel("sub-intensity matrix has non-finite entries".into()));
        }
        let n = matrix.rows;
        let mut matrix = matrix;
        for i in 0..n {
            for j in 0..n {
                let v = matrix[(i, j)];
                if i == j {
                    if !(v < 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "diagonal entry ({i},{i}) = {v} must be negative"
                        )));
                    }
                } else if v < 0.0 {
                    if v < -OFF_DIAGONAL_TOLERANCE {
                        return Err(Error::InvalidModel(format!(
                            "off-diagonal entry ({i},{j}) = {v} is negative"
                        )));
                    }
                    matrix[(i, j)] = 0.0;
                }
            }
        }
        let sums = matrix.row_sums();
        if let Some((i, s)) = sums.iter().enumerate().find(|(_, s)| **s > ROW_SUM_TOLERANCE) {
            return Err(Error::InvalidModel(format!("row {i} sums to {s} > 0")));
        }
        let exit: Vec<f64> = sums.iter().map(|s| (-s).max(0.0)).collect();
        let neg = matrix.scale(-1.0);
        let mean_times = Lu::new(&neg)
            .map_err(|_| Error::InvalidModel("sub-intensity matrix is singular".into()))?
            .solve_vec(&vec![1.0; n]);
        if mean_times.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidModel(
                "sub-intensity matrix has no path to absorption from some state".into(),
            ));
        }
        Ok(SubIntensity { matrix, exit })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn exit(&self) -> &[f64] {
        &self.exit
    }

    /// LU factors of `-T`.
    pub fn neg_lu(&self) -> Lu {
        Lu::new(&self.matrix.scale(-1.0)).expect("validated sub-intensity matrix is invertible")
    }

    /// Real part of the eigenvalue with the largest real part.
    ///
    /// Uses the decay rate of `‖e^{Ty}‖`, which tends to that real part.
    pub fn dominant_real_eigenvalue(&self) -> f64 {
        // Power iteration on (-T)^{-1}: its dominant eigenvalue is 1/|λ_max|
        // for the Perron root of a sub-intensity matrix (real, simple).
        let lu = self.neg_lu();
        let n = self.dim();
        let mut v = vec![1.0 / n as f64; n];
        let mut rate = 0.0;
        for _ in 0..2000 {
            let w = lu.solve_vec(&v);
            let norm: f64 = w.iter().map(|x| x.abs()).sum();
            let new_rate = norm / v.iter().map(|x| x.abs()).sum::<f64>();
            v = w.iter().map(|x| x / norm).collect();
            if (new_rate - rate).abs() <= 1e-14 * new_rate {
                rate = new_rate;
                break;
            }
            rate = new_rate;
        }
        -1.0 / rate
    }
}

/// Matrix function of a sub-intensity matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFunction {
    /// `base^T = exp(T log base)`.
    Power(f64),
    /// `exp(T s)`.
    ExpOfScaled(f64),
}

pub fn matrix_function(t: &SubIntensity, kind: MatrixFunction) -> Result<Matrix> {
    match kind {
        MatrixFunction::Power(base) => {
            if !(base > 0.0) || !base.is_finite() {
                return Err(Error::domain(base, "matrix power base must be positive"));
            }
            let l = base.ln();
            if l >= 0.0 {
                expm(t.matrix(), l, DEFAULT_EPS)
            } else {
                expm(&t.matrix().scale(-1.0), -l, DEFAULT_EPS)
            }
        }
        MatrixFunction::ExpOfScaled(s) => expm(t.matrix(), s, DEFAULT_EPS),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gev_t() -> Matrix {
        Matrix::from_rows(&[[-1.0, 0.5, 0.0], [0.2, -2.0, 0.8], [1.0, 1.0, -5.0]]).unwrap()
    }

    #[test]
    fn exp_at_zero_is_identity() {
        assert_eq!(expm(&gev_t(), 0.0, 1e-12).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn scalar_exponential() {
        let a = Matrix::from_rows(&[[-2.0]]).unwrap();
        let e = expm(&a, 1.5, 1e-12).unwrap();
        assert!((e[(0, 0)] - (-3.0f64).exp()).abs() < 1e-13);
        assert!((e[(0, 0)] - 0.049787068367863944).abs() < 1e-13);
    }

    #[test]
    fn exponential_rejects_bad_input() {
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(expm(&rect, 1.0, 1e-12), Err(Error::DimensionMismatch(_))));
        assert!(matches!(expm(&gev_t(), -1.0, 1e-12), Err(Error::Domain { .. })));
    }

    #[test]
    fn nilpotent_matrix_without_diagonal() {
        let a = Matrix::from_rows(&[[0.0, 2.0], [0.0, 0.0]]).unwrap();
        let e = expm(&a, 3.0, 1e-12).unwrap();
        let expected = Matrix::from_rows(&[[1.0, 6.0], [0.0, 1.0]]).unwrap();
        assert!(e.max_abs_diff(&expected) < 1e-11);
    }

    #[test]
    fn van_loan_empty_integral() {
        let g = van_loan_g(&[1.0, 0.0, 0.0], &gev_t(), 0.0).unwrap();
        assert_eq!(g, Matrix::zeros(3, 3));
    }

    #[test]
    fn van_loan_scalar_closed_form() {
        let t = Matrix::from_rows(&[[-1.0]]).unwrap();
        let g = van_loan_g(&[1.0], &t, 2.0).unwrap();
        assert!((g[(0, 0)] - 2.0 * (-2.0f64).exp()).abs() < 1e-13);
        assert!((g[(0, 0)] - 0.270670566473225).abs() < 1e-12);
    }

    #[test]
    fn van_loan_lower_block_matches_exponential() {
        let t = gev_t();
        let exit: Vec<f64> = t.row_sums().iter().map(|s| -s).collect();
        for &y in &[0.1, 1.0, 7.5] {
            let vl = van_loan(&t, &exit, &[0.2, 0.3, 0.5], y, 1e-12).unwrap();
            let direct = expm(&t, y, 1e-12).unwrap();
            assert!(vl.exp.max_abs_diff(&direct) < 1e-12);
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(solve(&Matrix::identity(2), &b).unwrap(), b);
        let a = Matrix::from_diag(&[2.0, 4.0]);
        let x = solve(&a, &Matrix::column(&[1.0, 1.0])).unwrap();
        assert_eq!(x.col(0), vec![0.5, 0.25]);
    }

    #[test]
    fn solve_detects_singularity() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert_eq!(solve(&a, &Matrix::identity(2)), Err(Error::SingularMatrix));
    }

    #[test]
    fn solve_row_matches_transpose() {
        let a = gev_t();
        let lu = Lu::new(&a).unwrap();
        let b = [0.3, -1.0, 2.0];
        let x = lu.solve_row(&b);
        let back = a.left_mul(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn power_of_one_is_identity() {
        let t = SubIntensity::new(gev_t()).unwrap();
        let m = matrix_function(&t, MatrixFunction::Power(1.0)).unwrap();
        assert!(m.max_abs_diff(&Matrix::identity(3)) <= 1e-14);
    }

    #[test]
    fn scalar_power() {
        let t = SubIntensity::new(Matrix::from_rows(&[[-2.0]]).unwrap()).unwrap();
        let m = matrix_function(&t, MatrixFunction::Power(4.0)).unwrap();
        assert!((m[(0, 0)] - 0.0625).abs() < 1e-14);
        assert!(matrix_function(&t, MatrixFunction::Power(0.0)).is_err());
    }

    #[test]
    fn sub_intensity_validation() {
        assert!(SubIntensity::new(Matrix::from_rows(&[[-1.0, 2.0], [0.0, -1.0]]).unwrap()).is_err());
        assert!(SubIntensity::new(Matrix::from_rows(&[[1.0]]).unwrap()).is_err());
        assert!(SubIntensity::new(Matrix::from_rows(&[[-1.0, -0.5], [0.0, -1.0]]).unwrap()).is_err());
        // Closed class without exit.
        assert!(SubIntensity::new(Matrix::from_rows(&[[-1.0, 1.0], [1.0, -1.0]]).unwrap()).is_err());
        let clamped =
            SubIntensity::new(Matrix::from_rows(&[[-1.0, -1e-13], [0.5, -1.0]]).unwrap()).unwrap();
        assert_eq!(clamped.matrix()[(0, 1)], 0.0);
        assert_eq!(clamped.exit(), &[1.0, 0.5]);
    }

    #[test]
    fn dominant_eigenvalue_of_triangular() {
        let t = SubIntensity::new(Matrix::from_rows(&[[-3.0, 1.0], [0.0, -1.5]]).unwrap()).unwrap();
        assert!((t.dominant_real_eigenvalue() + 1.5).abs() < 1e-10);
    }
}
