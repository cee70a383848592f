//! Seeded Monte-Carlo harness: power-versus-target sweeps, convergence
//! traces, aggregation and CSV I/O.
//!
//! Channels depend only on `(seed, run_index)`, so every scheme and every
//! SINR target of a run sees the same draw. Means are taken over linear
//! power and converted to dBm afterwards.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ao_driver::{run_scheme, scheme_setup, AoConfig, SolveReport};
use crate::baselines::SchemeKind;
use crate::error::{Error, Result};
use crate::model::{
    db_to_linear, dbm_to_watts, generate_channels, relay_power, simulate_relay_power, simulate_sinr, sinr,
    watts_to_dbm, ChannelSet, LinkBudget, SimConfig, SystemDims, User,
};

/// Relative tolerances of the simulation audit.
pub const AUDIT_POWER_TOL: f64 = 0.01;
pub const AUDIT_SINR_TOL: f64 = 0.02;

fn default_runs() -> usize {
    100
}

fn default_thetas() -> Vec<f64> {
    vec![2.0, 6.0, 10.0, 14.0]
}

fn default_schemes() -> Vec<String> {
    SchemeKind::ALL.iter().map(|k| k.name().to_string()).collect()
}

fn default_audit_steps() -> usize {
    200_000
}

/// Flat JSON experiment description. Missing keys take the reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "ref_m_r")]
    pub m_r: usize,
    #[serde(default = "two")]
    pub m_1: usize,
    #[serde(default = "two")]
    pub m_2: usize,
    #[serde(default = "two")]
    pub n_r: usize,
    #[serde(default = "two")]
    pub n_1: usize,
    #[serde(default = "two")]
    pub n_2: usize,
    #[serde(default = "ref_rho")]
    pub rho: f64,
    #[serde(default = "ref_kappa")]
    pub kappa: f64,
    #[serde(default = "ref_sigma2_dbm")]
    pub sigma2_dbm: f64,
    #[serde(default = "default_thetas")]
    pub theta_db_list: Vec<f64>,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<String>,
    #[serde(default)]
    pub max_outer: Option<usize>,
    #[serde(default)]
    pub sca_max: Option<usize>,
    #[serde(default)]
    pub tol_outer_rel: Option<f64>,
    #[serde(default)]
    pub tol_sca_rel: Option<f64>,
    #[serde(default)]
    pub solver_tol: Option<f64>,
    #[serde(default)]
    pub monotonicity_slack: Option<f64>,
    #[serde(default)]
    pub oracle_audit: bool,
    #[serde(default = "default_audit_steps")]
    pub audit_steps: usize,
}

fn ref_m_r() -> usize {
    4
}
fn two() -> usize {
    2
}
fn ref_rho() -> f64 {
    1e-4
}
fn ref_kappa() -> f64 {
    0.1
}
fn ref_sigma2_dbm() -> f64 {
    -30.0
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        if self.theta_db_list.is_empty() || self.theta_db_list.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("theta_db_list must be a nonempty list of finite values".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes must not be empty".into()));
        }
        self.scheme_kinds()?;
        self.dims()?;
        // the start point nulls self-interference at every transmitter
        if self.m_r < 2 || self.m_1 < 2 || self.m_2 < 2 {
            return Err(Error::Config("m_r, m_1 and m_2 must be at least 2".into()));
        }
        self.budget(self.theta_db_list[0])?;
        self.ao_config().validate()?;
        if self.oracle_audit && self.audit_steps < 100 {
            return Err(Error::Config("audit_steps must be at least 100".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> Result<SystemDims> {
        SystemDims::new(self.m_r, self.m_1, self.m_2, self.n_r, self.n_1, self.n_2)
    }

    pub fn budget(&self, theta_db: f64) -> Result<LinkBudget> {
        let t = db_to_linear(theta_db);
        LinkBudget::new(dbm_to_watts(self.sigma2_dbm), [t, t], self.rho, self.kappa)
    }

    pub fn scheme_kinds(&self) -> Result<Vec<SchemeKind>> {
        let mut kinds = self.schemes.iter().map(|s| s.parse()).collect::<Result<Vec<SchemeKind>>>()?;
        kinds.sort();
        kinds.dedup();
        Ok(kinds)
    }

    pub fn ao_config(&self) -> AoConfig {
        let d = AoConfig::default();
        AoConfig {
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            sca_max: self.sca_max.unwrap_or(d.sca_max),
            tol_outer_rel: self.tol_outer_rel.unwrap_or(d.tol_outer_rel),
            tol_sca_rel: self.tol_sca_rel.unwrap_or(d.tol_sca_rel),
            solver_tol: self.solver_tol.unwrap_or(d.solver_tol),
            monotonicity_slack: self.monotonicity_slack.unwrap_or(d.monotonicity_slack),
        }
    }

    /// Channel draw of run `run_index`; identical for every target and scheme.
    pub fn channels(&self, run_index: usize) -> Result<ChannelSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(run_index as u64);
        Ok(generate_channels(&mut rng, &self.dims()?, &self.budget(self.theta_db_list[0])?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta_db: f64,
    pub scheme: SchemeKind,
    pub run_index: usize,
    /// Absent when the run produced no usable point.
    pub total_power_dbm: Option<f64>,
    pub outer_iters: usize,
    pub status: String,
    pub drop_flag: bool,
}

impl SweepRow {
    pub fn succeeded(&self) -> bool {
        matches!(self.status.as_str(), "converged" | "max_iters") && self.total_power_dbm.is_some()
    }

    /// A failure that is not an expected infeasible draw.
    pub fn hard_failed(&self) -> bool {
        !self.succeeded() && !self.drop_flag
    }
}

/// Closed form against simulation on one final point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub theta_db: f64,
    pub scheme: SchemeKind,
    pub run_index: usize,
    pub power_rel_err: f64,
    pub sinr_rel_err: [f64; 2],
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub audit: Vec<AuditRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub theta_db: f64,
    pub scheme: SchemeKind,
    pub mean_power_dbm: Option<f64>,
    pub drop_rate: f64,
    pub mean_iters: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub scheme: SchemeKind,
    pub outer_iter: usize,
    pub mean_power_dbm: f64,
}

/// Result of one scheme on one draw, with the report when one was produced.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub row: SweepRow,
    pub report: Option<SolveReport>,
}

fn summarize_report(theta_db: f64, run_index: usize, kind: SchemeKind, res: Result<SolveReport>) -> CellResult {
    match res {
        Ok(report) => {
            let mut status = report.status.label().to_string();
            let mut drop_flag = matches!(status.as_str(), "dropped");
            if !report.status.is_failed() && !report.feasibility.feasible {
                status = "infeasible_final".into();
                drop_flag = false;
            }
            let ok = matches!(status.as_str(), "converged" | "max_iters");
            let row = SweepRow {
                theta_db,
                scheme: kind,
                run_index,
                total_power_dbm: if ok { watts_to_dbm(report.final_power()).ok() } else { None },
                outer_iters: report.iterations,
                status,
                drop_flag,
            };
            CellResult { row, report: Some(report) }
        }
        Err(e) => CellResult {
            row: SweepRow {
                theta_db,
                scheme: kind,
                run_index,
                total_power_dbm: None,
                outer_iters: 0,
                status: if e.is_drop() { "dropped".into() } else { "failed".into() },
                drop_flag: e.is_drop(),
            },
            report: None,
        },
    }
}

fn audit_point(spec: &ExperimentSpec, kind: SchemeKind, ch: &ChannelSet, budget: &LinkBudget, report: &SolveReport, stream: u64) -> Result<AuditRecord> {
    let (ch, budget) = scheme_setup(kind, ch, budget)?;
    let bf = &report.beamformers;
    let sim = SimConfig::new(spec.audit_steps);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_a0d1);
    rng.set_stream(stream);
    let closed = relay_power(bf, &ch, budget.sigma2)?;
    let simulated = simulate_relay_power(bf, &ch, budget.sigma2, sim, &mut rng)?;
    let power_rel_err = (simulated - closed).abs() / closed;
    let mut sinr_rel_err = [0.0; 2];
    for user in User::BOTH {
        let c = sinr(user, bf, &ch, budget.sigma2)?;
        let s = simulate_sinr(user, bf, &ch, budget.sigma2, sim, &mut rng)?;
        sinr_rel_err[user.index()] = (s - c).abs() / c;
    }
    let passed = power_rel_err <= AUDIT_POWER_TOL && sinr_rel_err.iter().all(|&e| e <= AUDIT_SINR_TOL);
    Ok(AuditRecord { theta_db: 0.0, scheme: kind, run_index: 0, power_rel_err, sinr_rel_err, passed })
}

/// Every scheme of `spec` on draw `run_index` at target `theta_db`.
pub fn run_cell(spec: &ExperimentSpec, theta_db: f64, run_index: usize) -> Result<Vec<CellResult>> {
    let ch = spec.channels(run_index)?;
    let budget = spec.budget(theta_db)?;
    let cfg = spec.ao_config();
    Ok(spec
        .scheme_kinds()?
        .into_iter()
        .map(|kind| summarize_report(theta_db, run_index, kind, run_scheme(kind, &ch, &budget, &cfg)))
        .collect())
}

#[cfg(feature = "parallel")]
fn map_cells<T: Send, F: Fn(&(f64, usize)) -> T + Sync + Send>(cells: &[(f64, usize)], f: F) -> Vec<T> {
    use rayon::prelude::*;
    cells.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T, F: Fn(&(f64, usize)) -> T>(cells: &[(f64, usize)], f: F) -> Vec<T> {
    cells.iter().map(f).collect()
}

/// Runs every scheme on every `(theta, run)` cell.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepTable> {
    spec.validate()?;
    let cells: Vec<(f64, usize)> =
        spec.theta_db_list.iter().flat_map(|&t| (0..spec.n_runs).map(move |r| (t, r))).collect();
    let per_cell = map_cells(&cells, |&(theta_db, run)| -> Result<(Vec<SweepRow>, Vec<AuditRecord>)> {
        let results = run_cell(spec, theta_db, run)?;
        let mut audits = vec![];
        if spec.oracle_audit {
            let ch = spec.channels(run)?;
            let budget = spec.budget(theta_db)?;
            for (k, res) in results.iter().enumerate() {
                if let (true, Some(report)) = (res.row.succeeded(), &res.report) {
                    let stream = (run as u64) << 16 | (k as u64) << 8 | theta_index(spec, theta_db) as u64;
                    let mut rec = audit_point(spec, res.row.scheme, &ch, &budget, report, stream).unwrap_or(AuditRecord {
                        theta_db,
                        scheme: res.row.scheme,
                        run_index: run,
                        power_rel_err: f64::NAN,
                        sinr_rel_err: [f64::NAN; 2],
                        passed: false,
                    });
                    rec.theta_db = theta_db;
                    rec.run_index = run;
                    audits.push(rec);
                }
            }
        }
        Ok((results.into_iter().map(|r| r.row).collect(), audits))
    });
    let mut table = SweepTable::default();
    for cell in per_cell {
        let (rows, audits) = cell?;
        table.rows.extend(rows);
        table.audit.extend(audits);
    }
    sort_rows(&mut table.rows);
    table
        .audit
        .sort_by(|a, b| a.theta_db.total_cmp(&b.theta_db).then(a.scheme.cmp(&b.scheme)).then(a.run_index.cmp(&b.run_index)));
    Ok(table)
}

fn theta_index(spec: &ExperimentSpec, theta_db: f64) -> usize {
    spec.theta_db_list.iter().position(|&t| t == theta_db).unwrap_or(0)
}

pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        a.theta_db.total_cmp(&b.theta_db).then(a.scheme.cmp(&b.scheme)).then(a.run_index.cmp(&b.run_index))
    });
}

/// Mean power per outer iteration over the successful runs, per scheme.
/// Runs that stopped early hold their final value. Iteration 0 is the
/// shared initialization point.
pub fn run_convergence_trace(spec: &ExperimentSpec) -> Result<Vec<TraceRow>> {
    spec.validate()?;
    if spec.theta_db_list.len() != 1 {
        return Err(Error::Config(format!(
            "a convergence trace needs exactly one target, got {}",
            spec.theta_db_list.len()
        )));
    }
    let theta_db = spec.theta_db_list[0];
    let cells: Vec<(f64, usize)> = (0..spec.n_runs).map(|r| (theta_db, r)).collect();
    let per_cell = map_cells(&cells, |&(t, run)| run_cell(spec, t, run));
    let kinds = spec.scheme_kinds()?;
    let mut traces: Vec<Vec<Vec<f64>>> = vec![vec![]; kinds.len()];
    for cell in per_cell {
        for (k, res) in cell?.into_iter().enumerate() {
            if let (true, Some(report)) = (res.row.succeeded(), res.report) {
                traces[k].push(report.power_trace);
            }
        }
    }
    let len = traces.iter().flatten().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![];
    for (k, kind) in kinds.iter().enumerate() {
        if traces[k].is_empty() {
            continue;
        }
        for it in 0..len {
            let sum: f64 = traces[k].iter().map(|t| t[it.min(t.len() - 1)]).sum();
            out.push(TraceRow { scheme: *kind, outer_iter: it, mean_power_dbm: watts_to_dbm(sum / traces[k].len() as f64)? });
        }
    }
    Ok(out)
}

/// Linear-domain mean power, drop rate and mean iterations per `(theta, scheme)`.
pub fn summarize(rows: &[SweepRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no sweep rows to summarize".into()));
    }
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = vec![];
    for group in sorted.chunk_by(|a, b| a.theta_db == b.theta_db && a.scheme == b.scheme) {
        let ok: Vec<&SweepRow> = group.iter().filter(|r| r.succeeded()).collect();
        let (mean_power_dbm, mean_iters) = if ok.is_empty() {
            (None, None)
        } else {
            let n = ok.len() as f64;
            let p: f64 = ok.iter().filter_map(|r| r.total_power_dbm).map(dbm_to_watts).sum::<f64>() / n;
            let it: f64 = ok.iter().map(|r| r.outer_iters as f64).sum::<f64>() / n;
            (Some(watts_to_dbm(p)?), Some(it))
        };
        out.push(SummaryRow {
            theta_db: group[0].theta_db,
            scheme: group[0].scheme,
            mean_power_dbm,
            drop_rate: 1.0 - ok.len() as f64 / group.len() as f64,
            mean_iters,
        });
    }
    Ok(out)
}

/// Fraction of hard failures per scheme over all rows.
pub fn hard_failure_rates(rows: &[SweepRow]) -> Vec<(SchemeKind, f64)> {
    let mut kinds: Vec<SchemeKind> = rows.iter().map(|r| r.scheme).collect();
    kinds.sort();
    kinds.dedup();
    kinds
        .into_iter()
        .map(|k| {
            let all: Vec<&SweepRow> = rows.iter().filter(|r| r.scheme == k).collect();
            let bad = all.iter().filter(|r| r.hard_failed()).count();
            (k, bad as f64 / all.len() as f64)
        })
        .collect()
}

/// Nine significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub const SWEEP_HEADER: [&str; 7] =
    ["theta_db", "scheme", "run_index", "total_power_dbm", "outer_iters", "status", "drop_flag"];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            fmt_float(r.theta_db),
            r.scheme.name().to_string(),
            r.run_index.to_string(),
            fmt_opt(r.total_power_dbm),
            r.outer_iters.to_string(),
            r.status.clone(),
            r.drop_flag.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected sweep header {header:?}")));
    }
    let num = |s: &str, what: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("{what} '{s}': {e}")));
    let mut out = vec![];
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        out.push(SweepRow {
            theta_db: num(&rec[0], "theta_db")?,
            scheme: rec[1].parse()?,
            run_index: rec[2].parse().map_err(|e| Error::Config(format!("run_index: {e}")))?,
            total_power_dbm: if rec[3].is_empty() { None } else { Some(num(&rec[3], "total_power_dbm")?) },
            outer_iters: rec[4].parse().map_err(|e| Error::Config(format!("outer_iters: {e}")))?,
            status: rec[5].to_string(),
            drop_flag: rec[6].parse().map_err(|e| Error::Config(format!("drop_flag: {e}")))?,
        });
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["theta_db", "scheme", "mean_power_dbm", "drop_rate", "mean_iters"]).map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            fmt_float(r.theta_db),
            r.scheme.name().to_string(),
            fmt_opt(r.mean_power_dbm),
            fmt_float(r.drop_rate),
            fmt_opt(r.mean_iters),
        ])
        .map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["scheme", "outer_iter", "mean_power_dbm"]).map_err(csv_err)?;
    for r in rows {
        wr.write_record([r.scheme.name().to_string(), r.outer_iter.to_string(), fmt_float(r.mean_power_dbm)])
            .map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}

pub fn write_audit_csv<W: Write>(rows: &[AuditRecord], w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["theta_db", "scheme", "run_index", "power_rel_err", "sinr1_rel_err", "sinr2_rel_err", "passed"])
        .map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            fmt_float(r.theta_db),
            r.scheme.name().to_string(),
            r.run_index.to_string(),
            fmt_float(r.power_rel_err),
            fmt_float(r.sinr_rel_err[0]),
            fmt_float(r.sinr_rel_err[1]),
            r.passed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}
