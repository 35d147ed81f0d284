// Happy paths only: error paths build a `JsError`, which needs a JS host.

use mixcor_wasm::{bridge_curve, chain_graph, simulate_estimate};
use serde_json::Value;

fn parse(s: Result<String, wasm_bindgen::JsError>) -> Value {
    serde_json::from_str(&s.ok().unwrap()).unwrap()
}

#[test]
fn bridge_curve_inverts_its_own_values() {
    let v = parse(bridge_curve("-0.5, 0.6", "", 11, f64::NAN));
    assert_eq!(v["r"].as_array().unwrap().len(), 11);
    assert!(v["inverse"].is_null());
    let tau = v["tau"][7].as_f64().unwrap();
    let back = parse(bridge_curve("-0.5, 0.6", "", 11, tau));
    assert!((back["inverse"]["r"].as_f64().unwrap() - v["r"][7].as_f64().unwrap()).abs() < 1e-7);
    // a continuous first variable is moved to the second slot
    let swapped = parse(bridge_curve("", "-0.5, 0.6", 11, f64::NAN));
    assert_eq!(swapped["tau"], v["tau"]);
}

#[test]
fn simulation_reports_all_estimates() {
    let v = parse(simulate_estimate(0.5, 4, 5000, 3));
    assert!((v["bridge"].as_f64().unwrap() - 0.5).abs() < 0.05);
    let counts: u64 = v["level_counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 5000);
}

#[test]
fn graph_penalty_controls_sparsity() {
    let dense = parse(chain_graph(6, 0.3, 1000, 1, 0.01));
    let sparse = parse(chain_graph(6, 0.3, 1000, 1, 0.3));
    assert!(sparse["edges"].as_array().unwrap().len() < dense["edges"].as_array().unwrap().len());
    assert_eq!(dense["trace"].as_array().unwrap().len(), 10);
}
