mod common;

use common::{integrate_half_line, ks_distance, mean_se, simpson};
use iphfit::em::{fit_iph, FitConfig};
use iphfit::iph::transform_log_density_gradient;
use iphfit::rng::draws;
use iphfit::{Error, Family, IphModel, Matrix, PhModel, Transform};

fn exponential(rate: f64) -> PhModel {
    PhModel::new(vec![1.0], Matrix::from_rows(&[[-rate]]).unwrap()).unwrap()
}

fn two_phase() -> PhModel {
    PhModel::new(vec![0.4, 0.6], Matrix::from_rows(&[[-1.5, 0.5], [0.3, -0.9]]).unwrap()).unwrap()
}

fn gev_model() -> IphModel {
    let t = Matrix::from_rows(&[[-1.0, 0.5, 0.0], [0.2, -2.0, 0.8], [1.0, 1.0, -5.0]]).unwrap();
    let base = PhModel::new(vec![1.0, 0.0, 0.0], t).unwrap();
    IphModel::new(base, Transform::Gev { mu: 2.0, sigma: 0.5, xi: 0.4 }).unwrap()
}

fn all_families() -> Vec<Transform> {
    vec![
        Transform::Identity,
        Transform::Pareto { beta: 1.7 },
        Transform::Weibull { beta: 0.6 },
        Transform::Gompertz { beta: 0.8 },
        Transform::Gev { mu: 1.0, sigma: 0.7, xi: 0.3 },
        Transform::Gev { mu: 1.0, sigma: 0.7, xi: 0.0 },
        Transform::Gev { mu: 1.0, sigma: 0.7, xi: -0.2 },
    ]
}

/// Lower end of the support.
fn support_start(t: &Transform) -> f64 {
    match *t {
        Transform::Gev { mu, sigma, xi } if xi > 0.0 => mu - sigma / xi,
        Transform::Gev { .. } => f64::NEG_INFINITY,
        _ => 0.0,
    }
}

#[test]
fn classical_pareto_and_weibull() {
    let pareto = IphModel::new(exponential(2.0), Transform::Pareto { beta: 1.0 }).unwrap();
    assert!((pareto.density(1.0).unwrap() - 0.25).abs() < 1e-14);
    assert!((pareto.survival(3.0).unwrap() - 0.0625).abs() < 1e-14);
    let weibull = IphModel::new(exponential(1.0), Transform::Weibull { beta: 2.0 }).unwrap();
    assert!((weibull.density(1.0).unwrap() - 0.735758882).abs() < 1e-9);
    for x in [0.3f64, 1.0, 2.2] {
        assert!((weibull.survival(x).unwrap() - (-x * x).exp()).abs() < 1e-14);
    }
}

#[test]
fn gev_example_moments_by_quadrature() {
    let m = gev_model();
    // Substituting y = u^5 about the support edge tames the heavy right tail.
    let lo = 2.0 - 0.5 / 0.4;
    let moment = |k: i32| {
        let f = |u: f64| {
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            let z = u / (1.0 - u);
            let y = z.powi(5);
            let x = lo + y;
            let jac = 5.0 * z.powi(4) / (1.0 - u).powi(2);
            if y == 0.0 || !y.is_finite() {
                return 0.0;
            }
            x.powi(k) * m.density(x).unwrap() * jac
        };
        simpson(&f, 0.0, 1.0, 1e-11)
    };
    let mean = moment(1);
    let sd = (moment(2) - mean * mean).sqrt();
    assert!((mean - 2.2524).abs() < 1e-2, "mean {mean}");
    assert!((sd - 1.4423).abs() < 1e-2, "sd {sd}");
}

#[test]
fn out_of_support_is_an_error() {
    let m = gev_model();
    assert!(matches!(m.density(0.5), Err(Error::Domain { .. })));
    let w = IphModel::new(exponential(1.0), Transform::Weibull { beta: 2.0 }).unwrap();
    assert!(matches!(w.density(-1.0), Err(Error::Domain { .. })));
}

#[test]
fn survival_is_integrated_density_for_every_family() {
    for t in all_families() {
        let m = IphModel::new(two_phase(), t).unwrap();
        let lo = support_start(&t);
        for q in [0.2, 0.5, 0.8] {
            let x = m.quantile(q).unwrap();
            let tail = integrate_half_line(
                &|u| {
                    let v = x + u;
                    if !v.is_finite() || v <= lo {
                        0.0
                    } else {
                        m.density(v).unwrap_or(0.0)
                    }
                },
                1e-11,
            );
            let s = m.survival(x).unwrap();
            assert!((s - tail).abs() < 1e-6, "{t:?} at {x}: {s} vs {tail}");
        }
    }
}

#[test]
fn generic_and_closed_form_paths_agree() {
    for t in all_families() {
        let m = IphModel::new(two_phase(), t).unwrap();
        for q in [0.01, 0.1, 0.4, 0.7, 0.95, 0.999] {
            let x = m.quantile(q).unwrap();
            let (a, b) = (m.density(x).unwrap(), m.density_closed_form(x).unwrap());
            assert!((a - b).abs() <= 1e-10 * b.abs(), "{t:?} density at {x}: {a} vs {b}");
            let (a, b) = (m.survival(x).unwrap(), m.survival_closed_form(x).unwrap());
            assert!((a - b).abs() <= 1e-10 * b.abs(), "{t:?} survival at {x}: {a} vs {b}");
        }
    }
}

#[test]
fn identity_sample_is_the_absorption_time() {
    let m = IphModel::new(two_phase(), Transform::Identity).unwrap();
    let a = draws(4, 100, |rng| m.sample(rng));
    let b = draws(4, 100, |rng| two_phase().sample_time(rng));
    assert_eq!(a, b);
}

#[test]
fn pareto_sample_mean() {
    let m = IphModel::new(exponential(3.0), Transform::Pareto { beta: 1.0 }).unwrap();
    let n = 100_000;
    let xs = draws(21, n, |rng| m.sample(rng));
    let (mean, se) = mean_se(&xs);
    assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn samples_pass_kolmogorov_smirnov() {
    for (seed, t) in all_families().into_iter().enumerate() {
        let m = IphModel::new(two_phase(), t).unwrap();
        let n = 10_000;
        let xs = draws(seed as u64 + 100, n, |rng| m.sample(rng));
        let d = ks_distance(&xs, |x| m.cdf(x).unwrap());
        assert!(d < 1.63 / (n as f64).sqrt(), "{t:?}: KS distance {d}");
    }
}

#[test]
fn inverse_transform_round_trip() {
    for t in all_families() {
        for i in 0..200 {
            let y = 1e-6 + 50.0 * (i as f64 / 199.0).powi(3);
            let back = t.to_base(t.from_base(y)).unwrap();
            assert!((back - y).abs() <= 1e-10 * y.max(1.0), "{t:?} at {y}: {back}");
        }
    }
}

fn pareto_gradient(alpha: f64, beta: f64, xs: &[f64]) -> f64 {
    xs.iter().map(|&x| -1.0 / beta + (alpha + 1.0) * x / (beta * (beta + x))).sum()
}

#[test]
fn pareto_gradient_matches_closed_form() {
    let xs = [0.2, 0.9, 1.4, 3.0, 7.5, 12.0];
    for (alpha, beta) in [(2.0, 1.0), (1.3, 2.5), (4.0, 0.4)] {
        let m = IphModel::new(exponential(alpha), Transform::Pareto { beta }).unwrap();
        let g = transform_log_density_gradient(&m, &xs).unwrap();
        let exact = pareto_gradient(alpha, beta, &xs);
        assert!((g[0] - exact).abs() <= 1e-5 * exact.abs(), "{g:?} vs {exact}");
    }
}

#[test]
fn gradient_agrees_with_richardson_extrapolation() {
    let xs = [0.3, 0.8, 1.1, 2.4, 4.0];
    let m = IphModel::new(two_phase(), Transform::Weibull { beta: 0.8 }).unwrap();
    let ll = |beta: f64| {
        IphModel::new(two_phase(), Transform::Weibull { beta }).unwrap().log_likelihood(&xs).unwrap()
    };
    let central = |h: f64| (ll(0.8 + h) - ll(0.8 - h)) / (2.0 * h);
    let h = 1e-3;
    let (d1, d2) = (central(h), central(2.0 * h));
    let extrapolated = (4.0 * d1 - d2) / 3.0;
    // The error of a central difference shrinks fourfold when h halves.
    let (d4, d8) = (central(4.0 * h), central(8.0 * h));
    let ratio = (d4 - d8) / (d2 - d4);
    assert!((ratio - 4.0).abs() < 0.1, "convergence ratio {ratio}");
    let g = transform_log_density_gradient(&m, &xs).unwrap();
    assert!((g[0] - extrapolated).abs() <= 1e-6 * extrapolated.abs(), "{} vs {extrapolated}", g[0]);
}

#[test]
fn gradient_rejects_data_outside_support() {
    let m = gev_model();
    assert!(transform_log_density_gradient(&m, &[0.1, 3.0]).is_err());
}

#[test]
fn weibull_fit_ends_at_a_stationary_point() {
    let truth = IphModel::new(exponential(1.0), Transform::Weibull { beta: 0.7 }).unwrap();
    let xs = draws(17, 2000, |rng| truth.sample(rng));
    let data = common::exact(&xs);
    let cfg = FitConfig { grad_tol: Some(1e-4), ..FitConfig::with_iterations(200) };
    let fit = fit_iph(&data, 1, Family::Weibull, &cfg).unwrap();
    let g = transform_log_density_gradient(&fit.model, &xs).unwrap();
    assert!(g[0].abs() < 1e-3, "gradient {g:?}");
}

#[test]
fn gev_is_continuous_at_zero_shape() {
    let base = two_phase();
    let at_zero = IphModel::new(base.clone(), Transform::Gev { mu: 1.0, sigma: 0.7, xi: 0.0 }).unwrap();
    let near = IphModel::new(base, Transform::Gev { mu: 1.0, sigma: 0.7, xi: 1e-8 }).unwrap();
    for i in 0..60 {
        let x = -2.0 + i as f64 * 0.25;
        let (a, b) = (at_zero.density(x).unwrap(), near.density(x).unwrap());
        assert!((a - b).abs() <= 1e-5 * a, "x = {x}: {a} vs {b}");
    }
}

#[test]
fn matrix_pareto_tail_exponent() {
    let x = 1e6f64;
    let cases = [
        (exponential(2.0), -2.0),
        (
            PhModel::new(vec![0.5, 0.5], Matrix::from_rows(&[[-1.5, 0.5], [0.0, -3.0]]).unwrap()).unwrap(),
            -1.5,
        ),
    ];
    for (base, lambda) in cases {
        let m = IphModel::new(base, Transform::Pareto { beta: 1.0 }).unwrap();
        let slope = m.survival(x).unwrap().ln() / x.ln();
        assert!((slope / lambda - 1.0).abs() < 0.05, "slope {slope} vs {lambda}");
    }
}
