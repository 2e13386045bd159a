//! Empirical dependence measures for bivariate samples.

use crate::error::{Error, Result};

/// Default quantile level for the upper tail dependence estimate.
pub const DEFAULT_TAIL_LEVEL: f64 = 0.995;

/// Pair counts behind Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KendallCounts {
    pub n: u64,
    /// Number of pairs `n(n-1)/2`.
    pub pairs: u64,
    /// Pairs tied in the first coordinate.
    pub ties_x: u64,
    /// Pairs tied in the second coordinate.
    pub ties_y: u64,
    /// Pairs tied in both coordinates.
    pub ties_xy: u64,
    /// Discordant pairs.
    pub discordant: u64,
}

impl KendallCounts {
    pub fn tau_b(&self) -> f64 {
        let concordant_minus_discordant = self.pairs as f64 - self.ties_x as f64 - self.ties_y as f64
            + self.ties_xy as f64
            - 2.0 * self.discordant as f64;
        let denom = ((self.pairs - self.ties_x) as f64 * (self.pairs - self.ties_y) as f64).sqrt();
        if denom == 0.0 {
            f64::NAN
        } else {
            concordant_minus_discordant / denom
        }
    }
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort counting inversions.
fn sort_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count(&mut v[..mid], &mut buf[..mid]) + sort_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Knight's `O(n log n)` pair counts.
pub fn kendall_counts(x: &[f64], y: &[f64]) -> Result<KendallCounts> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("Kendall's tau needs at least two pairs".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("sample contains NaN".into()));
    }
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let ties_x = tied_pairs(&xs);
    let mut ties_xy = 0u64;
    let mut run = 1u64;
    for i in 1..n {
        if xs[i] == xs[i - 1] && ys[i] == ys[i - 1] {
            run += 1;
        } else {
            ties_xy += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties_xy += run * (run - 1) / 2;

    let mut buf = vec![0.0; n];
    let discordant = sort_count(&mut ys, &mut buf);
    let ties_y = tied_pairs(&ys);
    Ok(KendallCounts {
        n: n as u64,
        pairs: (n as u64) * (n as u64 - 1) / 2,
        ties_x,
        ties_y,
        ties_xy,
        discordant,
    })
}

/// Kendall's tau-b.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(kendall_counts(x, y)?.tau_b())
}

/// `#{X1 > u1, X2 > u2} / #{X2 > u2}` with `u_j` the empirical `q`-quantiles.
pub fn upper_tail_dependence(x: &[f64], y: &[f64], q: f64) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::DimensionMismatch("samples must be non-empty and of equal length".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(q, "quantile level must lie in (0, 1)"));
    }
    let u1 = empirical_quantile(x, q);
    let u2 = empirical_quantile(y, q);
    let mut above = 0usize;
    let mut both = 0usize;
    for (a, b) in x.iter().zip(y) {
        if *b > u2 {
            above += 1;
            if *a > u1 {
                both += 1;
            }
        }
    }
    if above == 0 {
        return Err(Error::InsufficientData(format!("no exceedances of the {q} quantile")));
    }
    Ok(both as f64 / above as f64)
}

/// Order statistic `x_(ceil(q n))`.
pub fn empirical_quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// Fraction of observations sharing their value with another one.
fn tied_fraction(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let mut tied = 0usize;
    let mut run = 1usize;
    for i in 1..=s.len() {
        if i < s.len() && s[i] == s[i - 1] {
            run += 1;
        } else {
            if run > 1 {
                tied += run;
            }
            run = 1;
        }
    }
    tied as f64 / s.len() as f64
}

/// Summary of the dependence in a bivariate sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dependence {
    pub kendall_tau: f64,
    pub upper_tail: f64,
    /// More than half of one coordinate is tied.
    pub heavy_ties: bool,
}

/// Kendall's tau and `λ̂_U(q)` for a sample of at least 100 pairs.
pub fn empirical_dependence(x: &[f64], y: &[f64], q: f64) -> Result<Dependence> {
    if x.len() < 100 {
        return Err(Error::InsufficientData(format!("{} pairs, need at least 100", x.len())));
    }
    if !(q > 0.5 && q < 1.0) {
        return Err(Error::domain(q, "tail level must lie in (0.5, 1)"));
    }
    Ok(Dependence {
        kendall_tau: kendall_tau(x, y)?,
        upper_tail: upper_tail_dependence(x, y, q)?,
        heavy_ties: tied_fraction(x) > 0.5 || tied_fraction(y) > 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let (mut s, mut tx, mut ty, mut n0) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let a = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
                let b = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
                s += a * b;
                n0 += 1.0;
                if a == 0.0 {
                    tx += 1.0;
                }
                if b == 0.0 {
                    ty += 1.0;
                }
            }
        }
        s / ((n0 - tx) * (n0 - ty)).sqrt()
    }

    #[test]
    fn matches_quadratic_count() {
        let x = [1.0, 2.0, 2.0, 3.0, 5.0, 4.0, 4.0, 0.5];
        let y = [2.0, 1.0, 3.0, 3.0, 0.0, 4.0, 4.0, 1.0];
        assert!((kendall_tau(&x, &y).unwrap() - naive_tau_b(&x, &y)).abs() < 1e-14);
    }

    #[test]
    fn comonotone_and_countermonotone() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.37 % 11.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let d = empirical_dependence(&x, &x, 0.9).unwrap();
        assert_eq!(d.kendall_tau, 1.0);
        assert_eq!(d.upper_tail, 1.0);
        assert_eq!(kendall_tau(&x, &neg).unwrap(), -1.0);
    }

    #[test]
    fn tie_warning_and_errors() {
        let x: Vec<f64> = (0..200).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = (0..200).map(|i| i as f64).collect();
        assert!(empirical_dependence(&x, &y, 0.6).unwrap().heavy_ties);
        assert!(empirical_dependence(&x[..50], &y[..50], 0.9).is_err());
        assert!(empirical_dependence(&x, &y, 0.3).is_err());
    }
}
