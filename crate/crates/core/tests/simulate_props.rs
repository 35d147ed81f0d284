use mixcor::bridge::{estimate_cutoffs, CutoffVector};
use mixcor::simulate::{concentration_check, sample_copula, scenario1, scenario2, CopulaSpec, ScenarioConfig};
use nalgebra::DMatrix;

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

#[test]
fn identity_sample_is_uncorrelated() {
    let data = sample_copula(&CopulaSpec::gaussian(DMatrix::identity(3, 3)), 100_000, 12).unwrap();
    for j in 0..3 {
        for k in (j + 1)..3 {
            assert!(pearson(data.column(j).as_slice(), data.column(k).as_slice()).abs() < 0.01);
        }
    }
}

#[test]
fn equal_mass_levels() {
    let spec = CopulaSpec::bivariate(0.2).with_discretization(0, CutoffVector::equal_mass(3));
    let data = sample_copula(&spec, 100_000, 5).unwrap();
    for l in 0..3 {
        let share = data.column(0).iter().filter(|&&v| v == l as f64).count() as f64 / 1e5;
        assert!((share - 1.0 / 3.0).abs() < 0.005, "level {l}: {share}");
    }
}

#[test]
fn cutoffs_recovered_from_samples() {
    let truth = CutoffVector::new(vec![-1.1, -0.2, 0.6, 1.5]).unwrap();
    let spec = CopulaSpec::bivariate(0.4).with_discretization(1, truth.clone());
    let n = 5000;
    let data = sample_copula(&spec, n, 8).unwrap();
    let codes: Vec<usize> = data.column(1).iter().map(|&v| v as usize).collect();
    let est = estimate_cutoffs(&codes, 5).unwrap();
    let tol = 3.0 * (5.0 / n as f64).sqrt();
    for (a, b) in est.as_slice().iter().zip(truth.as_slice()) {
        assert!((a - b).abs() < tol);
    }
}

#[test]
fn collapse_protocol_agrees_with_equal_mass_at_sixteen() {
    let cfg = ScenarioConfig {
        p_values: vec![4, 16],
        r_grid: vec![0.1, 0.45, 0.8],
        n: 60,
        reps: 4,
        seed: 21,
    };
    let one = scenario1(&cfg).unwrap();
    let two = scenario2(&cfg).unwrap();
    assert_eq!(one.curve(16), two.curve(16));
    assert_eq!(one.baseline, two.baseline);
    assert_ne!(one.curve(4), two.curve(4));
    assert_eq!(one, scenario1(&cfg).unwrap());
}

#[test]
fn concentration_in_two_dimensions() {
    let t = concentration_check(2, 3, &[200, 800], 4, 3).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows[1].mean_sup_error < t.rows[0].mean_sup_error);
}
