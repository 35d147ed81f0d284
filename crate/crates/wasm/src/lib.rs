//! Browser bindings for the demo page in `www/`. Every function returns a
//! JSON string so the page needs no generated type glue.

use mixcor::bridge::{Bridge, BridgeKind, CutoffVector};
use mixcor::estimator::{estimate_latent_correlation, project_psd};
use mixcor::glasso::{edge_set, glasso_fit, select_hbic, GlassoConfig};
use mixcor::kendall::tau_a;
use mixcor::simulate::{sample_copula, CopulaSpec};
use mixcor::TauVariant;
use nalgebra::DMatrix;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse_cutoffs(text: &str) -> Result<Vec<f64>, JsError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| js(format!("bad cutoff `{s}`: {e}"))))
        .collect()
}

/// Bridge for a pair described by cutoff lists; an empty list means a
/// continuous variable. A continuous first variable is swapped to second.
fn bridge_for(cutoffs_j: &str, cutoffs_k: &str) -> Result<Bridge, JsError> {
    let (mut cj, mut ck) = (parse_cutoffs(cutoffs_j)?, parse_cutoffs(cutoffs_k)?);
    if cj.is_empty() {
        std::mem::swap(&mut cj, &mut ck);
    }
    let vector = |c: Vec<f64>| CutoffVector::new(c).map_err(js);
    match (cj.len(), ck.len()) {
        (0, _) => Bridge::new(BridgeKind::ContinuousContinuous, TauVariant::TauA, None, None),
        (a, 0) => Bridge::new(BridgeKind::OrdinalContinuous { levels: a + 1 }, TauVariant::TauA, Some(&vector(cj)?), None),
        (a, b) => Bridge::new(
            BridgeKind::OrdinalOrdinal { levels_j: a + 1, levels_k: b + 1 },
            TauVariant::TauA,
            Some(&vector(cj)?),
            Some(&vector(ck)?),
        ),
    }
    .map_err(js)
}

/// Samples the τᵃ bridge on `points` correlations in `[-1, 1]` and, when
/// `tau` is finite, inverts it there.
#[wasm_bindgen]
pub fn bridge_curve(cutoffs_j: &str, cutoffs_k: &str, points: usize, tau: f64) -> Result<String, JsError> {
    let bridge = bridge_for(cutoffs_j, cutoffs_k)?;
    let points = points.clamp(2, 2000);
    let r: Vec<f64> = (0..points).map(|i| -0.999 + 1.998 * i as f64 / (points - 1) as f64).collect();
    let value: Vec<f64> = r.iter().map(|&x| bridge.forward(x).value).collect();
    let inverse = if tau.is_finite() {
        let inv = bridge.invert(tau).map_err(js)?;
        json!({ "tau": tau, "r": inv.r, "clamped": inv.clamped })
    } else {
        serde_json::Value::Null
    };
    let (lo, hi) = bridge.range();
    Ok(json!({ "r": r, "tau": value, "range": [lo, hi], "inverse": inverse }).to_string())
}

/// Draws `n` pairs with latent correlation `r`, cuts the first into `levels`
/// equal-mass categories and compares the bridge estimate with naive ones.
#[wasm_bindgen]
pub fn simulate_estimate(r: f64, levels: usize, n: usize, seed: u32) -> Result<String, JsError> {
    if !(2..=16).contains(&levels) {
        return Err(js("levels must be between 2 and 16"));
    }
    let spec = CopulaSpec::bivariate(r).with_discretization(0, CutoffVector::equal_mass(levels));
    let data = sample_copula(&spec, n, u64::from(seed)).map_err(js)?;
    let est = estimate_latent_correlation(&data, &spec.column_specs(), TauVariant::TauA).map_err(js)?;
    let (x, y) = (data.column(0), data.column(1));
    let t = tau_a(x.as_slice(), y.as_slice()).map_err(js)?;
    let (mx, my) = (x.mean(), y.mean());
    let cov = x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
    let pearson = cov / (x.variance() * y.variance()).sqrt() / n as f64;
    let counts: Vec<usize> = (0..levels).map(|l| x.iter().filter(|&&v| v == l as f64).count()).collect();
    Ok(json!({
        "truth": r,
        "bridge": est.matrix[(0, 1)],
        "sine": (std::f64::consts::FRAC_PI_2 * t).sin(),
        "pearson": pearson,
        "tau_a": t,
        "clamped": est.entry(0, 1).clamped,
        "level_counts": counts,
    })
    .to_string())
}

/// Chain graph on `d` latent variables with every other one observed as a
/// three-level ordinal. A positive `lambda` fits that penalty; otherwise the
/// penalty is chosen by HBIC.
#[wasm_bindgen]
pub fn chain_graph(d: usize, strength: f64, n: usize, seed: u32, lambda: f64) -> Result<String, JsError> {
    if !(3..=12).contains(&d) || !(0.0..0.5).contains(&strength.abs()) {
        return Err(js("need 3 <= d <= 12 and |strength| < 0.5"));
    }
    let omega = DMatrix::from_fn(d, d, |i, j| match i.abs_diff(j) {
        0 => 1.0,
        1 => strength,
        _ => 0.0,
    });
    let s = omega.try_inverse().ok_or_else(|| js("chain precision is singular"))?;
    let sigma = DMatrix::from_fn(d, d, |i, j| s[(i, j)] / (s[(i, i)] * s[(j, j)]).sqrt());
    let mut spec = CopulaSpec::gaussian((&sigma + sigma.transpose()) * 0.5);
    for j in (0..d).step_by(2) {
        spec = spec.with_discretization(j, CutoffVector::equal_mass(3));
    }
    let data = sample_copula(&spec, n, u64::from(seed)).map_err(js)?;
    let est = estimate_latent_correlation(&data, &spec.column_specs(), TauVariant::TauA).map_err(js)?;
    let r = project_psd(&est.matrix, 1e-8);
    let cfg = GlassoConfig::default();
    let select = select_hbic(&r, n, &cfg).map_err(js)?;
    let (chosen, fitted) = if lambda > 0.0 {
        (lambda, glasso_fit(&r, lambda, &cfg).map_err(js)?.omega)
    } else {
        (select.chosen_lambda, select.omega.clone())
    };
    let edges: Vec<_> = edge_set(&fitted)
        .into_iter()
        .map(|(j, k)| json!({ "j": j, "k": k, "pcor": -fitted[(j, k)] / (fitted[(j, j)] * fitted[(k, k)]).sqrt() }))
        .collect();
    let trace: Vec<_> = select
        .hbic_trace
        .iter()
        .map(|t| json!({ "lambda": t.lambda, "hbic": t.hbic, "edges": t.edges }))
        .collect();
    let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| r[(i, j)]).collect()).collect();
    Ok(json!({
        "d": d,
        "ordinal": (0..d).map(|j| j % 2 == 0).collect::<Vec<_>>(),
        "lambda": chosen,
        "hbic_lambda": select.chosen_lambda,
        "edges": edges,
        "trace": trace,
        "correlation": rows,
    })
    .to_string())
}
