//! External oracles for the numerical analysis layer: textbook integrals
//! and a reference normal CDF for the quadrature, truncated-moment closed
//! forms for the density model, and finite differences for both gradients
//! across many random configurations.

use hiersample::analysis::contrast::{
    self, ContrastConfig, EmbeddingSet,
};
use hiersample::analysis::density::{DensityModel, MonotoneCase};
use hiersample::analysis::quad;
use hiersample::rng;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

const TOL: f64 = 1e-10;

#[test]
fn quadrature_reproduces_textbook_integrals() {
    let cases: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64, f64)> = vec![
        (Box::new(|x: f64| x * x * x), 0.0, 1.0, 0.25),
        (Box::new(f64::sin), 0.0, std::f64::consts::PI, 2.0),
        (Box::new(f64::exp), 0.0, 1.0, std::f64::consts::E - 1.0),
        (
            Box::new(|x: f64| 1.0 / (1.0 + x * x)),
            0.0,
            1.0,
            std::f64::consts::FRAC_PI_4,
        ),
        (Box::new(f64::sqrt), 0.0, 1.0, 2.0 / 3.0),
        (
            Box::new(|x: f64| (10.0 * x).sin().powi(2)),
            0.0,
            2.0 * std::f64::consts::PI,
            std::f64::consts::PI,
        ),
    ];
    for (k, (f, a, b, expected)) in cases.iter().enumerate() {
        let q = quad::integrate(f, *a, *b, TOL).unwrap();
        assert!(
            (q.value - expected).abs() < 1e-9,
            "case {k}: got {} expected {expected}",
            q.value
        );
    }
}

#[test]
fn quadrature_matches_the_reference_normal_cdf() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let pdf = |x: f64| normal.pdf(x);
    for (a, b) in [
        (-3.0, 3.0),
        (-1.0, 1.0),
        (0.0, 0.5),
        (-2.5, -0.75),
        (0.3, 2.9),
    ] {
        let q = quad::integrate(pdf, a, b, TOL).unwrap();
        let expected = normal.cdf(b) - normal.cdf(a);
        assert!(
            (q.value - expected).abs() < 1e-10,
            "[{a}, {b}]: got {} expected {expected}",
            q.value
        );
    }
}

#[test]
fn truncated_densities_match_their_moment_closed_forms() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    for (mu, sigma) in [(0.7, 0.1), (0.3, 0.15), (0.5, 0.4), (0.9, 0.05)] {
        let dm = DensityModel::new(mu, sigma, mu - 0.2, 0.1, 1.0, 1.0).unwrap();
        let mass = quad::integrate(|x| dm.f_pos(x), 0.0, 1.0, TOL).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-9, "mass {mass} for ({mu}, {sigma})");

        // Mean of a normal truncated to [0, 1]:
        // mu + sigma * (phi(alpha) - phi(beta)) / Z with alpha = -mu/sigma,
        // beta = (1 - mu)/sigma, Z = Phi(beta) - Phi(alpha).
        let alpha = -mu / sigma;
        let beta = (1.0 - mu) / sigma;
        let z = normal.cdf(beta) - normal.cdf(alpha);
        let expected = mu + sigma * (normal.pdf(alpha) - normal.pdf(beta)) / z;
        let mean = quad::integrate(|x| x * dm.f_pos(x), 0.0, 1.0, TOL)
            .unwrap()
            .value;
        assert!(
            (mean - expected).abs() < 1e-9,
            "mean {mean} vs closed form {expected} for ({mu}, {sigma})"
        );
    }
}

#[test]
fn posterior_grids_are_monotone_on_the_stated_intervals() {
    let cases = [
        (0.7, 0.10, 0.3, 0.10, MonotoneCase::EqualSpread, 0.0, 1.0),
        (0.7, 0.05, 0.3, 0.15, MonotoneCase::TighterPositive, 0.0, 0.75),
        (0.7, 0.15, 0.3, 0.05, MonotoneCase::WiderPositive, 0.25, 1.0),
    ];
    for (mu_p, s_p, mu_n, s_n, case, lo, hi) in cases {
        let dm = DensityModel::new(mu_p, s_p, mu_n, s_n, 1e4, 1e4).unwrap();
        let interval = dm.monotone_interval();
        assert_eq!(interval.case, case);
        assert!((interval.lo - lo).abs() < 1e-12, "lo {} vs {lo}", interval.lo);
        assert!((interval.hi - hi).abs() < 1e-12, "hi {} vs {hi}", interval.hi);

        let grid = hiersample::analysis::density::posterior_grid(&dm, 1001).unwrap();
        assert_eq!(grid.len(), 1001);
        let inside: Vec<&(f64, f64)> = grid
            .iter()
            .filter(|(x, _)| (interval.lo..=interval.hi).contains(x))
            .collect();
        assert!(inside.len() > 100, "interval covers too little of the grid");
        for pair in inside.windows(2) {
            assert!(
                pair[1].1 >= pair[0].1,
                "posterior falls from {} to {} between x = {} and {} ({case:?})",
                pair[0].1,
                pair[1].1,
                pair[0].0,
                pair[1].0
            );
        }
    }
}

#[test]
fn finite_differences_confirm_both_gradients_on_many_configs() {
    const STEP: f64 = 1e-5;
    let cfg = ContrastConfig::default();
    let mut seed_rng = rng::substream(0xa9a, &[1]);
    for case in 0..50 {
        let es = EmbeddingSet::random(8, 16, seed_rng.gen()).unwrap();
        let i = case % 8;
        let p1 = (i + 1) % 8;
        let p2 = (i + 3) % 8;
        let positives = [(p1, 0.6), (p2, 0.4)];
        let pool: Vec<usize> = (0..8).filter(|&k| k != i).collect();

        let grad = contrast::self_gradient(&es, i, &positives, &pool, &cfg).unwrap();
        let fd = contrast::fd_self_gradient(&es, i, &positives, &pool, &cfg, STEP).unwrap();
        assert_close(&grad, &fd, 1e-5, &format!("self gradient, case {case}"));
        let radial: f64 = grad
            .iter()
            .zip(es.unit(i))
            .map(|(g, z)| g * z)
            .sum();
        assert!(radial.abs() < 1e-10, "radial leak {radial} in case {case}");

        // Cross gradient: j's positive distribution is a point mass on i,
        // and i must stay out of j's pool for the closed form to be exact.
        let j = p1;
        let pool_j: Vec<usize> = (0..8).filter(|&k| k != i && k != j).collect();
        let grad = contrast::cross_gradient(&es, i, j, 1.0, &pool_j, &cfg).unwrap();
        let fd = contrast::fd_cross_gradient(&es, i, j, &pool_j, &cfg, STEP).unwrap();
        assert_close(&grad, &fd, 1e-5, &format!("cross gradient, case {case}"));
    }
}

fn assert_close(got: &[f64], oracle: &[f64], tol: f64, what: &str) {
    let diff: f64 = got
        .iter()
        .zip(oracle)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rel = diff / scale.max(1e-300);
    assert!(rel < tol, "{what}: relative error {rel}");
}
