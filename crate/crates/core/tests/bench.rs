use fdrelay::baselines::SchemeKind;
use fdrelay::bench::{
    read_sweep_csv, run_cell, run_convergence_trace, run_sweep, summarize, write_sweep_csv, write_trace_csv,
    ExperimentSpec,
};
use fdrelay::model::{total_power, watts_to_dbm};

fn small_spec(extra: &str) -> ExperimentSpec {
    let body = format!(r#"{{"n_runs": 3, "theta_db_list": [6.0, 10.0], "schemes": ["ProposedFD", "ZfFD", "FdBaseline"]{extra}}}"#);
    ExperimentSpec::from_json(&body).unwrap()
}

fn sweep_bytes(spec: &ExperimentSpec) -> Vec<u8> {
    let mut out = vec![];
    write_sweep_csv(&run_sweep(spec).unwrap().rows, &mut out).unwrap();
    out
}

#[test]
fn reruns_write_identical_bytes() {
    let spec = small_spec("");
    let a = sweep_bytes(&spec);
    assert_eq!(a, sweep_bytes(&spec));
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with("theta_db,scheme,run_index,total_power_dbm,outer_iters,status,drop_flag\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 3);
}

#[test]
fn seed_changes_draws() {
    let a = sweep_bytes(&small_spec(""));
    let b = sweep_bytes(&small_spec(r#", "seed": 9"#));
    assert_ne!(a, b);
}

#[test]
fn every_scheme_sees_the_same_draw() {
    let spec = small_spec("");
    for run in 0..3 {
        let ch = spec.channels(run).unwrap();
        assert_eq!(ch, spec.channels(run).unwrap());
        for theta in [6.0, 10.0] {
            let cells = run_cell(&spec, theta, run).unwrap();
            let base = cells.iter().find(|c| c.row.scheme == SchemeKind::FdBaseline).unwrap();
            let start = base.report.as_ref().unwrap().beamformers.clone();
            let p = total_power(&start, &ch, spec.budget(theta).unwrap().sigma2).unwrap();
            assert!((base.row.total_power_dbm.unwrap() - watts_to_dbm(p).unwrap()).abs() < 1e-9);
            for c in &cells {
                // all full-duplex schemes start from the same point on this draw
                let first = c.report.as_ref().unwrap().power_trace[0];
                assert!((first - p).abs() <= 1e-12 * p, "{:?}", c.row.scheme);
            }
        }
    }
}

#[test]
fn csv_round_trip_preserves_summary() {
    let table = run_sweep(&small_spec("")).unwrap();
    let mut buf = vec![];
    write_sweep_csv(&table.rows, &mut buf).unwrap();
    let back = read_sweep_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), table.rows.len());
    let (s0, s1) = (summarize(&table.rows).unwrap(), summarize(&back).unwrap());
    assert_eq!(s0.len(), s1.len());
    for (a, b) in s0.iter().zip(&s1) {
        assert_eq!((a.theta_db, a.scheme), (b.theta_db, b.scheme));
        let (pa, pb) = (a.mean_power_dbm.unwrap(), b.mean_power_dbm.unwrap());
        assert!((pa - pb).abs() < 1e-7, "{pa} vs {pb}");
        assert_eq!(a.drop_rate, b.drop_rate);
    }
}

#[test]
fn traces_share_start_and_decrease() {
    let spec = ExperimentSpec::from_json(r#"{"n_runs": 4, "theta_db_list": [10.0], "schemes": ["ProposedFD", "ZfFD"]}"#).unwrap();
    let rows = run_convergence_trace(&spec).unwrap();
    let curve = |k: SchemeKind| -> Vec<f64> { rows.iter().filter(|r| r.scheme == k).map(|r| r.mean_power_dbm).collect() };
    let (p, z) = (curve(SchemeKind::ProposedFd), curve(SchemeKind::ZfFd));
    assert_eq!(p.len(), z.len());
    assert_eq!(p[0], z[0]);
    for c in [&p, &z] {
        assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{c:?}");
    }
    let mut out = vec![];
    write_trace_csv(&rows, &mut out).unwrap();
    assert!(String::from_utf8(out).unwrap().starts_with("scheme,outer_iter,mean_power_dbm\n"));
}

#[test]
fn trace_requires_one_target() {
    let spec = small_spec("");
    assert!(run_convergence_trace(&spec).is_err());
}

#[test]
fn audit_mode_checks_final_points() {
    let spec = ExperimentSpec::from_json(
        r#"{"n_runs": 2, "theta_db_list": [10.0], "schemes": ["ProposedFD", "IdealFD"], "oracle_audit": true}"#,
    )
    .unwrap();
    let table = run_sweep(&spec).unwrap();
    assert_eq!(table.audit.len(), 4);
    for rec in &table.audit {
        assert!(rec.passed, "{rec:?}");
    }
}

#[test]
fn bad_specs_are_rejected() {
    for body in [
        r#"{"n_runs": 0}"#,
        r#"{"theta_db_list": []}"#,
        r#"{"schemes": ["Nope"]}"#,
        r#"{"unknown_key": 1}"#,
        r#"{"m_r": 1}"#,
        r#"{"tol_outer_rel": -1}"#,
    ] {
        assert!(ExperimentSpec::from_json(body).is_err(), "{body}");
    }
}
