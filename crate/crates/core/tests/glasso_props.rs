use mixcor::glasso::{default_lambda_path, edge_set, glasso_fit, objective, select_hbic, GlassoConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

// Minimizes a convex scalar function on [lo, hi] by golden-section search.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-13 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

// With S = [[1, ρ], [ρ, 1]] and Ω = [[a, x], [x, a]], the diagonal can be
// profiled out: a(x) = (1 + √(1 + 4x²)) / 2, leaving
// g(x) = 2a + 2ρx − log a + 2λ|x| up to the `log(a² − x²) = log a` step.
fn two_by_two_oracle(rho: f64, lambda: f64) -> (f64, f64) {
    let a_of = |x: f64| (1.0 + (1.0 + 4.0 * x * x).sqrt()) / 2.0;
    let g = |x: f64| {
        let a = a_of(x);
        2.0 * a + 2.0 * rho * x - a.ln() + 2.0 * lambda * x.abs()
    };
    let x = golden_min(g, -5.0, 5.0);
    (a_of(x), x)
}

#[test]
fn two_by_two_matches_scalar_minimization() {
    for &(rho, lambda) in &[(0.5, 0.1), (0.5, 0.3), (-0.7, 0.05), (0.2, 0.25), (0.9, 0.4)] {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let fit = glasso_fit(&s, lambda, &GlassoConfig::default()).unwrap();
        let (a, x) = two_by_two_oracle(rho, lambda);
        assert!((fit.omega[(0, 1)] - x).abs() < 1e-6, "rho {rho} lambda {lambda}: {} vs {x}", fit.omega[(0, 1)]);
        assert!((fit.omega[(0, 0)] - a).abs() < 1e-6);
        assert!((fit.omega[(1, 1)] - a).abs() < 1e-6);
    }
}

#[test]
fn large_penalty_on_three_variables_is_diagonal() {
    let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.35, -0.2, 0.35, 1.0, 0.1, -0.2, 0.1, 1.0]);
    let fit = glasso_fit(&s, 0.35, &GlassoConfig::default()).unwrap();
    assert!(edge_set(&fit.omega).is_empty());
    let fit = glasso_fit(&s, 0.3, &GlassoConfig::default()).unwrap();
    assert_eq!(edge_set(&fit.omega), vec![(0, 1)]);
}

#[test]
fn hbic_trace_has_one_row_per_lambda() {
    let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.16, 0.4, 1.0, 0.4, 0.16, 0.4, 1.0]);
    let est = select_hbic(&s, 500, &GlassoConfig::default()).unwrap();
    assert_eq!(est.hbic_trace.len(), 10);
    let best = est.hbic_trace.iter().map(|t| t.hbic).fold(f64::INFINITY, f64::min);
    let first = est.hbic_trace.iter().find(|t| t.hbic == best).unwrap();
    assert_eq!(first.lambda, est.chosen_lambda);
}

fn correlation_from(values: Vec<f64>, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(d, d + 2, &values);
    let c = &a * a.transpose();
    let mut r = DMatrix::from_fn(d, d, |i, j| c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt());
    for i in 0..d {
        r[(i, i)] = 1.0;
        for j in 0..i {
            r[(j, i)] = r[(i, j)];
        }
    }
    r
}

fn random_correlation() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..6).prop_flat_map(|d| {
        proptest::collection::vec(-1.0f64..1.0, d * (d + 2)).prop_map(move |v| correlation_from(v, d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kkt_conditions_hold(r in random_correlation(), frac in 0.05f64..0.9) {
        let d = r.nrows();
        let m = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| r[(i, j)].abs()).fold(0.0, f64::max);
        let lambda = (frac * m).max(1e-3);
        let fit = glasso_fit(&r, lambda, &GlassoConfig::default()).unwrap();
        let omega = &fit.omega;
        prop_assert_eq!(omega.clone(), omega.transpose());
        let w = omega.clone().try_inverse().unwrap();
        for i in 0..d {
            prop_assert!((w[(i, i)] - r[(i, i)]).abs() < 1e-4);
            for j in 0..d {
                if i == j { continue; }
                let gap = w[(i, j)] - r[(i, j)];
                prop_assert!(gap.abs() <= lambda + 1e-4, "gap {} > lambda {}", gap, lambda);
                if omega[(i, j)].abs() > 1e-8 {
                    prop_assert!((gap - lambda * omega[(i, j)].signum()).abs() < 1e-4);
                }
            }
        }
        // never worse than the diagonal starting point
        let start = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 / r[(i, i)] } else { 0.0 });
        prop_assert!(fit.objective <= objective(&r, &start, lambda, false).unwrap() + 1e-9);
    }

    #[test]
    fn sparsity_is_monotone_along_the_path(r in random_correlation()) {
        let counts: Vec<usize> = default_lambda_path(&r)
            .iter()
            .map(|&l| edge_set(&glasso_fit(&r, l, &GlassoConfig::default()).unwrap().omega).len())
            .collect();
        for w in counts.windows(2) {
            prop_assert!(w[1] <= w[0], "{:?}", counts);
        }
    }
}
