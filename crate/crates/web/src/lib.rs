//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes a JSON request string and returns a JSON string. The
//! `*_json` functions hold the logic and are what the native tests call.

use fdrelay::ao_driver::run_scheme;
use fdrelay::baselines::SchemeKind;
use fdrelay::bench::{run_convergence_trace, run_sweep, summarize, ExperimentSpec, SummaryRow, TraceRow};
use fdrelay::model::{
    loop_gain, relay_power, simulate_relay_power, simulate_sinr, sinr, watts_to_dbm, SimConfig, User,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Browser-side work is single threaded, so requests are capped.
const MAX_RUNS: usize = 40;
const MAX_SIM_STEPS: usize = 400_000;

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRequest {
    pub theta_db: f64,
    pub runs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub theta_db_list: Vec<f64>,
    pub runs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub schemes: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExploreRequest {
    pub theta_db: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub run_index: usize,
    pub kappa: f64,
    pub sim_steps: usize,
}

#[derive(Debug, Serialize)]
pub struct ExploreResponse {
    pub iterations: usize,
    pub status: String,
    pub total_power_dbm: f64,
    pub relay_power_dbm: f64,
    pub simulated_relay_power_dbm: f64,
    pub loop_gain: f64,
    pub sinr_db: [f64; 2],
    pub simulated_sinr_db: [f64; 2],
    pub power_trace_dbm: Vec<f64>,
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("bad request: {e}"))
}

fn check_runs(runs: usize) -> Result<(), String> {
    if runs == 0 || runs > MAX_RUNS {
        return Err(format!("runs must be between 1 and {MAX_RUNS}"));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn convergence_trace_json(request: &str) -> Result<String, String> {
    let req: TraceRequest = parse(request)?;
    check_runs(req.runs)?;
    let mut spec = ExperimentSpec {
        theta_db_list: vec![req.theta_db],
        n_runs: req.runs,
        seed: req.seed,
        schemes: vec!["ProposedFD".into(), "ZfFD".into(), "IdealFD".into()],
        ..ExperimentSpec::default()
    };
    if let Some(k) = req.kappa {
        spec.kappa = k;
    }
    let rows: Vec<TraceRow> = run_convergence_trace(&spec).map_err(|e| e.to_string())?;
    to_json(&rows)
}

pub fn theta_sweep_json(request: &str) -> Result<String, String> {
    let req: SweepRequest = parse(request)?;
    check_runs(req.runs)?;
    if req.theta_db_list.len() > 8 {
        return Err("at most 8 targets per request".into());
    }
    let spec = ExperimentSpec {
        theta_db_list: req.theta_db_list,
        n_runs: req.runs,
        seed: req.seed,
        schemes: req.schemes,
        ..ExperimentSpec::default()
    };
    let table = run_sweep(&spec).map_err(|e| e.to_string())?;
    let summary: Vec<SummaryRow> = summarize(&table.rows).map_err(|e| e.to_string())?;
    to_json(&summary)
}

/// Solves one draw with the proposed scheme and compares the closed-form
/// power and SINR at the solution with the sample-level simulation.
pub fn explore_json(request: &str) -> Result<String, String> {
    let req: ExploreRequest = parse(request)?;
    if !(1_000..=MAX_SIM_STEPS).contains(&req.sim_steps) {
        return Err(format!("sim_steps must be between 1000 and {MAX_SIM_STEPS}"));
    }
    let spec = ExperimentSpec { seed: req.seed, kappa: req.kappa, theta_db_list: vec![req.theta_db], ..ExperimentSpec::default() };
    spec.validate().map_err(|e| e.to_string())?;
    let ch = spec.channels(req.run_index).map_err(|e| e.to_string())?;
    let budget = spec.budget(req.theta_db).map_err(|e| e.to_string())?;
    let report = run_scheme(SchemeKind::ProposedFd, &ch, &budget, &spec.ao_config()).map_err(|e| e.to_string())?;
    let bf = &report.beamformers;
    let sigma2 = budget.sigma2;
    let sim = SimConfig::new(req.sim_steps);
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let err = |e: fdrelay::Error| e.to_string();
    let closed = relay_power(bf, &ch, sigma2).map_err(err)?;
    let simulated = simulate_relay_power(bf, &ch, sigma2, sim, &mut rng).map_err(err)?;
    let mut sinr_db = [0.0; 2];
    let mut simulated_sinr_db = [0.0; 2];
    for user in User::BOTH {
        sinr_db[user.index()] = db(sinr(user, bf, &ch, sigma2).map_err(err)?);
        simulated_sinr_db[user.index()] = db(simulate_sinr(user, bf, &ch, sigma2, sim, &mut rng).map_err(err)?);
    }
    let dbm = |w: f64| watts_to_dbm(w).map_err(err);
    to_json(&ExploreResponse {
        iterations: report.iterations,
        status: report.status.label().to_string(),
        total_power_dbm: dbm(report.final_power())?,
        relay_power_dbm: dbm(closed)?,
        simulated_relay_power_dbm: dbm(simulated)?,
        loop_gain: loop_gain(&bf.w, &bf.v, &ch.h_rr),
        sinr_db,
        simulated_sinr_db,
        power_trace_dbm: report.power_trace.iter().map(|&p| dbm(p)).collect::<Result<_, _>>()?,
    })
}

#[wasm_bindgen]
pub fn convergence_trace(request: &str) -> Result<String, JsValue> {
    convergence_trace_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn theta_sweep(request: &str) -> Result<String, JsValue> {
    theta_sweep_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn explore(request: &str) -> Result<String, JsValue> {
    explore_json(request).map_err(|e| JsValue::from_str(&e))
}
