use fdrelay_web::{convergence_trace_json, explore_json, theta_sweep_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn trace_has_three_curves_from_a_shared_start() {
    let v = parse(&convergence_trace_json(r#"{"theta_db": 10, "runs": 3}"#).unwrap());
    let rows = v.as_array().unwrap();
    let curve = |name: &str| -> Vec<f64> {
        rows.iter().filter(|r| r["scheme"] == name).map(|r| r["mean_power_dbm"].as_f64().unwrap()).collect()
    };
    let (p, z, i) = (curve("ProposedFD"), curve("ZfFD"), curve("IdealFD"));
    assert!(!p.is_empty() && p.len() == z.len() && z.len() == i.len());
    assert_eq!(p[0], z[0]);
    assert!(p[1] < z[1]);
    assert!(p.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn sweep_summarizes_each_target_and_scheme() {
    let v = parse(
        &theta_sweep_json(r#"{"theta_db_list": [2, 10], "runs": 2, "schemes": ["ProposedFD", "FdBaseline"], "seed": 4}"#)
            .unwrap(),
    );
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r["drop_rate"].as_f64().unwrap(), 0.0);
        assert!(r["mean_power_dbm"].is_number());
    }
    let power = |t: f64, s: &str| {
        rows.iter().find(|r| r["theta_db"] == t && r["scheme"] == s).unwrap()["mean_power_dbm"].as_f64().unwrap()
    };
    assert!(power(10.0, "ProposedFD") < power(10.0, "FdBaseline"));
    assert!(power(2.0, "ProposedFD") < power(10.0, "ProposedFD"));
}

#[test]
fn explorer_compares_closed_form_with_simulation() {
    let v = parse(&explore_json(r#"{"theta_db": 10, "kappa": 0.1, "sim_steps": 100000}"#).unwrap());
    let closed = v["relay_power_dbm"].as_f64().unwrap();
    let sim = v["simulated_relay_power_dbm"].as_f64().unwrap();
    assert!((closed - sim).abs() < 0.1, "{closed} vs {sim}");
    for k in 0..2 {
        assert!(v["sinr_db"][k].as_f64().unwrap() >= 10.0 - 1e-3);
        assert!((v["sinr_db"][k].as_f64().unwrap() - v["simulated_sinr_db"][k].as_f64().unwrap()).abs() < 0.2);
    }
    assert!(v["loop_gain"].as_f64().unwrap() < 1.0);
    let trace = v["power_trace_dbm"].as_array().unwrap();
    assert_eq!(trace.len(), v["iterations"].as_u64().unwrap() as usize + 1);
}

#[test]
fn requests_are_validated() {
    assert!(convergence_trace_json(r#"{"theta_db": 10, "runs": 0}"#).is_err());
    assert!(convergence_trace_json(r#"{"theta_db": 10, "runs": 1000}"#).is_err());
    assert!(convergence_trace_json("not json").is_err());
    assert!(theta_sweep_json(r#"{"theta_db_list": [10], "runs": 1, "schemes": ["Bogus"]}"#).is_err());
    assert!(explore_json(r#"{"theta_db": 10, "kappa": 0.1, "sim_steps": 10}"#).is_err());
    assert!(explore_json(r#"{"theta_db": 10, "kappa": -1, "sim_steps": 10000}"#).is_err());
    let e = explore_json(r#"{"theta_db": 10, "kappa": 0.1, "sim_steps": 10000, "extra": 1}"#).unwrap_err();
    assert!(e.contains("unknown field"));
}
