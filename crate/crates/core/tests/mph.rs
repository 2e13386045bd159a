mod common;

use common::{block_example, integrate_half_line, mean_se, mph_example};
use iphfit::dependence::{empirical_dependence, kendall_tau};
use iphfit::linalg::solve;
use iphfit::rng::draws;
use iphfit::{BivariateBlockModel, Error, InhomBase, InhomMph, Matrix, MphModel, PhModel, Transform};
use rand::Rng;

fn product_block(a: f64, b: f64) -> BivariateBlockModel {
    BivariateBlockModel::new(
        vec![1.0],
        Matrix::from_rows(&[[-a]]).unwrap(),
        Matrix::from_rows(&[[a]]).unwrap(),
        Matrix::from_rows(&[[-b]]).unwrap(),
    )
    .unwrap()
}

fn small_block() -> BivariateBlockModel {
    BivariateBlockModel::new(
        vec![0.6, 0.4],
        Matrix::from_rows(&[[-1.5, 0.5], [0.2, -0.9]]).unwrap(),
        Matrix::from_rows(&[[0.7, 0.3], [0.0, 0.7]]).unwrap(),
        Matrix::from_rows(&[[-2.0, 1.0], [0.5, -1.2]]).unwrap(),
    )
    .unwrap()
}

fn random_mph() -> MphModel {
    MphModel::new(
        vec![0.5, 0.3, 0.2],
        Matrix::from_rows(&[[-2.0, 1.2, 0.3], [0.4, -1.5, 0.6], [0.1, 0.9, -1.8]]).unwrap(),
        Matrix::from_rows(&[[0.8, 0.2], [0.1, 0.9], [0.5, 0.5]]).unwrap(),
    )
    .unwrap()
}

/// Density at positive arguments, zero on the axes.
fn density_or_zero(m: &BivariateBlockModel, y1: f64, y2: f64) -> f64 {
    if y1 > 0.0 && y2 > 0.0 {
        m.density(y1, y2).unwrap()
    } else {
        0.0
    }
}

#[test]
fn unit_rewards_keep_the_base_law() {
    let base = PhModel::new(vec![0.2, 0.8], Matrix::from_rows(&[[-1.0, 0.4], [0.3, -2.0]]).unwrap()).unwrap();
    let m = MphModel::from_base(&base, Matrix::from_rows(&[[1.0], [1.0]]).unwrap()).unwrap();
    assert_eq!(m.marginal(0).unwrap(), base);
    let (mean, corr) = m.mean_and_correlation();
    assert!((mean[0] - base.mean()).abs() < 1e-14);
    assert!((corr[(0, 0)] - 1.0).abs() < 1e-14);
    let a = draws(2, 50, |rng| m.sample(rng)[0]);
    let b = draws(2, 50, |rng| base.sample_time(rng));
    assert_eq!(a, b);
}

#[test]
fn block_marginals() {
    let b = block_example();
    let first = b.marginal(0).unwrap();
    assert_eq!(first.pi(), b.alpha());
    assert_eq!(first.matrix(), b.t11().matrix());
    // Second marginal: PH(α(-T11)⁻¹T12, T22).
    let neg = b.t11().matrix().scale(-1.0);
    let row = Matrix::from_rows(&[b.alpha()]).unwrap();
    let a = solve(&neg.transpose(), &row.transpose()).unwrap().transpose();
    let pi2 = b.t12().left_mul(a.row(0));
    let second = b.marginal(1).unwrap();
    for (x, y) in second.pi().iter().zip(&pi2) {
        assert!((x - y).abs() < 1e-14);
    }
    assert_eq!(second.matrix(), b.t22().matrix());
    let mph = mph_example();
    for j in 0..2 {
        let (u, v) = (mph.marginal(j).unwrap(), b.marginal(j).unwrap());
        assert!((u.mean() - v.mean()).abs() < 1e-12);
    }
}

#[test]
fn example_means_and_correlation() {
    let m = mph_example();
    assert!((m.marginal(0).unwrap().mean() - 0.5).abs() < 1e-4);
    assert!((m.marginal(1).unwrap().mean() - 0.9609).abs() < 1e-4);
    let (mean, corr) = m.mean_and_correlation();
    assert!((mean[0] - 0.5).abs() < 1e-4 && (mean[1] - 0.9609).abs() < 1e-4);
    assert!((corr[(0, 1)] - 0.1148).abs() < 1e-3);
}

#[test]
fn degenerate_marginal_is_reported() {
    let m = MphModel::new(
        vec![1.0, 0.0],
        Matrix::from_rows(&[[-1.0, 1.0], [0.0, -1.0]]).unwrap(),
        Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap(),
    )
    .unwrap();
    assert_eq!(m.marginal(1), Err(Error::DegenerateMarginal(1)));
}

#[test]
fn moments_match_monte_carlo() {
    let m = random_mph();
    let n = 1_000_000;
    let ys = draws(31, n, |rng| m.sample(rng));
    let cross = m.cross_moments();
    let mean = m.mean();
    for j in 0..2 {
        let (mc, se) = mean_se(&ys.iter().map(|y| y[j]).collect::<Vec<_>>());
        assert!((mc - mean[j]).abs() < 3.0 * se, "mean {j}: {mc} vs {}", mean[j]);
        for i in 0..=j {
            let (mc, se) = mean_se(&ys.iter().map(|y| y[i] * y[j]).collect::<Vec<_>>());
            assert!((mc - cross[(i, j)]).abs() < 3.0 * se, "moment ({i}, {j}): {mc} vs {}", cross[(i, j)]);
        }
    }
}

#[test]
fn product_density_and_survival() {
    let b = product_block(1.0, 2.0);
    assert!((b.density(1.0, 1.0).unwrap() - 2.0 * (-3.0f64).exp()).abs() < 1e-15);
    for (y1, y2) in [(0.3f64, 1.2f64), (2.0, 0.1), (0.0, 0.7)] {
        let s = (-y1 - 2.0 * y2).exp();
        assert!((b.survival(y1, y2).unwrap() - s).abs() < 1e-14);
    }
    assert!(b.density(0.0, 1.0).is_err());
}

#[test]
fn joint_density_integrates_to_one() {
    for b in [small_block(), block_example()] {
        let inner = |y1: f64| integrate_half_line(&|y2| density_or_zero(&b, y1, y2), 1e-10);
        let mass = integrate_half_line(&inner, 1e-9);
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }
}

#[test]
fn integrating_out_the_second_coordinate() {
    let b = small_block();
    let first = b.marginal(0).unwrap();
    for y1 in [0.2, 1.0, 2.7] {
        let f = integrate_half_line(&|y2| density_or_zero(&b, y1, y2), 1e-12);
        assert!((f - first.density(y1).unwrap()).abs() < 1e-8, "y1 = {y1}");
    }
}

#[test]
fn survival_boundaries_and_quadrature() {
    let b = small_block();
    assert!((b.survival(0.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
    let first = b.marginal(0).unwrap();
    for y in [0.4, 1.5] {
        assert!((b.survival(y, 0.0).unwrap() - first.survival(y).unwrap()).abs() < 1e-13);
    }
    for (y1, y2) in [(0.5, 0.5), (1.2, 0.3)] {
        let inner = |u: f64| integrate_half_line(&|v| density_or_zero(&b, y1 + u, y2 + v), 1e-10);
        let s = integrate_half_line(&inner, 1e-9);
        assert!((b.survival(y1, y2).unwrap() - s).abs() < 1e-6);
    }
}

#[test]
fn density_and_survival_on_a_grid() {
    let b = block_example();
    let grid: Vec<f64> = (0..25).map(|i| 0.05 + i as f64 * 0.2).collect();
    for &y1 in &grid {
        let row: Vec<f64> = grid.iter().map(|&y2| b.survival(y1, y2).unwrap()).collect();
        assert!(row.windows(2).all(|w| w[1] <= w[0]));
        for &y2 in &grid {
            assert!(b.density(y1, y2).unwrap() >= 0.0);
            let s = b.survival(y1, y2).unwrap();
            assert!((0.0..=1.0).contains(&s));
            assert!(b.survival(y1 + 0.2, y2).unwrap() <= s);
        }
    }
}

#[test]
fn reward_sums_equal_absorption_time() {
    let m = mph_example();
    for (y, absorption) in draws(6, 5000, |rng| m.sample_with_absorption(rng)) {
        assert!((y.iter().sum::<f64>() - absorption).abs() <= 1e-12 * absorption.max(1.0));
    }
    let marginal_total: f64 = (0..2).map(|j| m.marginal(j).unwrap().mean()).sum();
    assert!((marginal_total - m.absorption().mean()).abs() < 1e-12);
}

#[test]
fn example_sample_mean() {
    let m = mph_example();
    let ys = draws(12, 100_000, |rng| m.sample(rng));
    for (j, target) in [0.5, 0.9609].into_iter().enumerate() {
        let (mean, se) = mean_se(&ys.iter().map(|y| y[j]).collect::<Vec<_>>());
        assert!((mean - target).abs() < 3.0 * se + 1e-4, "coordinate {j}: {mean}");
    }
}

#[test]
fn identity_transforms_reduce_to_block_density() {
    let b = small_block();
    let m = InhomMph::new(InhomBase::Block(b.clone()), vec![Transform::Identity, Transform::Identity]).unwrap();
    for (x1, x2) in [(0.3, 0.9), (2.0, 0.1)] {
        assert!((m.density(x1, x2).unwrap() / b.density(x1, x2).unwrap() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn independent_paretos() {
    let (a, b) = (1.5, 2.5);
    let m = InhomMph::new(
        InhomBase::Block(product_block(a, b)),
        vec![Transform::Pareto { beta: 1.0 }, Transform::Pareto { beta: 1.0 }],
    )
    .unwrap();
    for (x1, x2) in [(0.5f64, 2.0f64), (10.0, 0.3)] {
        let exact = a * (1.0 + x1).powf(-a - 1.0) * b * (1.0 + x2).powf(-b - 1.0);
        assert!((m.density(x1, x2).unwrap() / exact - 1.0).abs() < 1e-12);
        assert!((m.density_closed_form(x1, x2).unwrap() / exact - 1.0).abs() < 1e-12);
    }
}

#[test]
fn weibull_pair_density_integrates_to_one() {
    let m = InhomMph::new(
        InhomBase::Block(small_block()),
        vec![Transform::Weibull { beta: 0.8 }, Transform::Weibull { beta: 1.5 }],
    )
    .unwrap();
    // x = v⁵ smooths the singularity of the intensity at zero.
    let f = |v1: f64, v2: f64| {
        if v1 <= 0.0 || v2 <= 0.0 {
            return 0.0;
        }
        let jac = 25.0 * v1.powi(4) * v2.powi(4);
        m.density(v1.powi(5), v2.powi(5)).unwrap() * jac
    };
    let inner = |v1: f64| integrate_half_line(&|v2| f(v1, v2), 1e-10);
    let mass = integrate_half_line(&inner, 1e-9);
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
}

#[test]
fn inhomogeneous_density_needs_a_block_base() {
    let m = InhomMph::new(InhomBase::Mph(mph_example()), vec![Transform::Identity; 2]).unwrap();
    assert!(matches!(m.density(1.0, 1.0), Err(Error::Unsupported(_))));
    assert_eq!(m.sample(&mut iphfit::rng::stream(1, 0)).len(), 2);
}

#[test]
fn comonotone_and_independent_dependence() {
    let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() + i as f64 * 1e-3).collect();
    let d = empirical_dependence(&x, &x, 0.95).unwrap();
    assert_eq!(d.kendall_tau, 1.0);
    assert_eq!(d.upper_tail, 1.0);
    let pairs = draws(13, 100_000, |rng| (rng.random::<f64>(), rng.random::<f64>()));
    let (u, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let d = empirical_dependence(&u, &v, 0.99).unwrap();
    assert!(d.kendall_tau.abs() < 0.01);
    assert!(d.upper_tail.abs() < 0.05);
    assert!(empirical_dependence(&u[..50], &v[..50], 0.99).is_err());
}

#[test]
fn increasing_transforms_keep_kendall_tau() {
    let b = small_block();
    let pairs = draws(14, 3000, |rng| b.sample(rng));
    let (y1, y2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (g1, g2) = (Transform::Pareto { beta: 2.0 }, Transform::Gompertz { beta: 0.5 });
    let x1: Vec<f64> = y1.iter().map(|&y| g1.from_base(y)).collect();
    let x2: Vec<f64> = y2.iter().map(|&y| g2.from_base(y)).collect();
    assert_eq!(kendall_tau(&y1, &y2).unwrap(), kendall_tau(&x1, &x2).unwrap());
}
