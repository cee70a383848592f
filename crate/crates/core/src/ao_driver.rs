//! Alternating optimization over the four beamformer blocks.
//!
//! Each outer iteration updates `v`, `w`, `f_1, f_2` and `u_1, u_2` in that
//! order. Every update is a descent step on total power with the other
//! blocks fixed, so the recorded power must not rise; a rise beyond the
//! configured slack ends the run as a failure.

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::baselines::{hd_target, init_beamformers, make_ideal, zf_ao, SchemeKind};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::model::{check_feasible, total_power, BeamformerSet, ChannelSet, FeasibilityReport, LinkBudget, User};
use crate::relay_sca::{sca_v, sca_w, ScaOptions, ScaStop, VSubproblemData, WSubproblemData};
use crate::user_opt::{mmse_u_for, solve_f, FSubproblemData};

/// Relative SINR tolerance of the final feasibility audit.
pub const FEASIBILITY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoConfig {
    pub max_outer: usize,
    pub sca_max: usize,
    pub tol_outer_rel: f64,
    pub tol_sca_rel: f64,
    pub solver_tol: f64,
    pub monotonicity_slack: f64,
}

impl Default for AoConfig {
    fn default() -> Self {
        AoConfig {
            max_outer: 30,
            sca_max: 20,
            tol_outer_rel: 1e-4,
            tol_sca_rel: 1e-4,
            solver_tol: 1e-8,
            monotonicity_slack: 1e-7,
        }
    }
}

impl AoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 || self.sca_max == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        let reals = [self.tol_outer_rel, self.tol_sca_rel, self.solver_tol, self.monotonicity_slack];
        if reals.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config("tolerances must be positive and finite".into()));
        }
        if self.tol_outer_rel < self.solver_tol {
            return Err(Error::Config(format!(
                "outer tolerance {} is tighter than the solver tolerance {}",
                self.tol_outer_rel, self.solver_tol
            )));
        }
        Ok(())
    }

    fn sca(&self) -> ScaOptions {
        ScaOptions {
            max_iters: self.sca_max,
            tol_rel: self.tol_sca_rel,
            solver_tol: self.solver_tol,
            monotonicity_slack: self.monotonicity_slack,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    V,
    W,
    F,
    U,
}

impl Stage {
    pub const ORDER: [Stage; 4] = [Stage::V, Stage::W, Stage::F, Stage::U];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub iteration: usize,
    pub stage: Stage,
    /// Total power after the update.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FailReason {
    MonotonicityBreach { iteration: usize, stage: Stage, before: f64, after: f64 },
    Subproblem { iteration: usize, stage: Stage, message: String, drop: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Failed(FailReason),
}

impl SolveStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Failed(FailReason::MonotonicityBreach { .. }) => "monotonicity_breach",
            SolveStatus::Failed(FailReason::Subproblem { drop: true, .. }) => "dropped",
            SolveStatus::Failed(FailReason::Subproblem { .. }) => "failed",
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, SolveStatus::Failed(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub scheme: SchemeKind,
    /// Total power at the start point and after each outer iteration.
    pub power_trace: Vec<f64>,
    pub stage_trace: Vec<StageRecord>,
    /// Last accepted point. On failure this is the point before the failing update.
    pub beamformers: BeamformerSet,
    pub feasibility: FeasibilityReport,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Notes about updates that were skipped or repaired.
    pub flags: Vec<String>,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn final_power(&self) -> f64 {
        *self.power_trace.last().expect("trace holds the start point")
    }

    /// Outer iterations needed to get within `rel` of the final power.
    pub fn iterations_to_within(&self, rel: f64) -> usize {
        let last = self.final_power();
        self.power_trace.iter().position(|&p| p <= last * (1.0 + rel)).unwrap_or(self.iterations)
    }
}

/// Shared outer loop: runs the four stages, audits monotonicity and stops on
/// relative improvement below `tol_outer_rel`.
pub(crate) fn alternate<F>(
    scheme: SchemeKind,
    ch: &ChannelSet,
    budget: &LinkBudget,
    cfg: &AoConfig,
    init: BeamformerSet,
    mut step: F,
) -> Result<SolveReport>
where
    F: FnMut(Stage, &mut BeamformerSet) -> Result<Option<String>>,
{
    cfg.validate()?;
    budget.validate()?;
    init.validate(&ch.dims())?;
    let start = Instant::now();
    let mut bf = init;
    let p0 = total_power(&bf, ch, budget.sigma2).map_err(|e| e.context("start point"))?;
    let mut power_trace = vec![p0];
    let mut stage_trace = vec![];
    let mut flags = vec![];
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;

    'outer: for it in 1..=cfg.max_outer {
        let before_iter = *power_trace.last().expect("nonempty");
        let mut current = before_iter;
        for stage in Stage::ORDER {
            let mut trial = bf.clone();
            let outcome = step(stage, &mut trial).and_then(|note| {
                if stage == Stage::W {
                    // (w, v) -> (w / t, t v) changes neither power nor SINR
                    let t = trial.w.norm();
                    if t > 0.0 {
                        trial.w /= C64::from(t);
                        trial.v *= C64::from(t);
                    }
                }
                let p = total_power(&trial, ch, budget.sigma2)?;
                Ok((note, p))
            });
            let (note, p) = match outcome {
                Ok(x) => x,
                Err(e) => {
                    status = SolveStatus::Failed(FailReason::Subproblem {
                        iteration: it,
                        stage,
                        drop: e.is_drop(),
                        message: format!("iteration {it}, stage {stage:?}: {e}"),
                    });
                    break 'outer;
                }
            };
            if let Some(n) = note {
                flags.push(format!("iteration {it}, stage {stage:?}: {n}"));
            }
            if p > current * (1.0 + cfg.monotonicity_slack) {
                status = SolveStatus::Failed(FailReason::MonotonicityBreach { iteration: it, stage, before: current, after: p });
                break 'outer;
            }
            bf = trial;
            current = p;
            stage_trace.push(StageRecord { iteration: it, stage, power: p });
        }
        iterations = it;
        power_trace.push(current);
        if before_iter - current <= cfg.tol_outer_rel * before_iter {
            status = SolveStatus::Converged;
            break;
        }
    }

    let feasibility = check_feasible(&bf, ch, budget.sigma2, budget.theta, FEASIBILITY_TOL);
    Ok(SolveReport {
        scheme,
        power_trace,
        stage_trace,
        beamformers: bf,
        feasibility,
        status,
        iterations,
        flags,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Proposed alternating optimization from a feasible start point.
pub fn run_ao(ch: &ChannelSet, budget: &LinkBudget, cfg: &AoConfig, init: BeamformerSet) -> Result<SolveReport> {
    run_ao_as(SchemeKind::ProposedFd, ch, budget, cfg, init)
}

fn run_ao_as(
    scheme: SchemeKind,
    ch: &ChannelSet,
    budget: &LinkBudget,
    cfg: &AoConfig,
    init: BeamformerSet,
) -> Result<SolveReport> {
    let opts = cfg.sca();
    alternate(scheme, ch, budget, cfg, init, |stage, bf| {
        let note = match stage {
            Stage::V => {
                let data = VSubproblemData::from_state(bf, ch, budget);
                let state = sca_v(&data, &bf.v, &opts)?;
                bf.v = state.iterate;
                sca_note(&state.stop)
            }
            Stage::W => {
                let data = WSubproblemData::from_state(bf, ch, budget);
                let state = sca_w(&data, &bf.w, &opts)?;
                bf.w = state.iterate;
                sca_note(&state.stop)
            }
            Stage::F => {
                let data = FSubproblemData::from_state(bf, ch, budget);
                let before = data.objective(&bf.f);
                match solve_f(&data, cfg.solver_tol) {
                    Ok(sol) if sol.objective <= before => {
                        bf.f = sol.f;
                        (sol.repair > 1.0 + 1e-6).then(|| format!("transmit solution scaled by {:.3e}", sol.repair))
                    }
                    Ok(sol) => Some(format!("transmit solution {:.6e} above incumbent {before:.6e}; kept incumbent", sol.objective)),
                    Err(e @ Error::Infeasible(_)) => Some(format!("kept incumbent transmit beamformers: {e}")),
                    Err(e) => return Err(e),
                }
            }
            Stage::U => {
                let u1 = mmse_u_for(User::First, bf, ch, budget.sigma2)?;
                let u2 = mmse_u_for(User::Second, bf, ch, budget.sigma2)?;
                bf.u = [u1, u2];
                None
            }
        };
        Ok(note)
    })
}

fn sca_note(stop: &ScaStop) -> Option<String> {
    match stop {
        ScaStop::Rejected(why) | ScaStop::SolverFailed(why) => Some(format!("SCA stopped early: {why}")),
        _ => None,
    }
}

/// Start-point-only report.
fn baseline_report(scheme: SchemeKind, ch: &ChannelSet, budget: &LinkBudget, bf: BeamformerSet) -> Result<SolveReport> {
    let p = total_power(&bf, ch, budget.sigma2)?;
    Ok(SolveReport {
        scheme,
        power_trace: vec![p],
        stage_trace: vec![],
        feasibility: check_feasible(&bf, ch, budget.sigma2, budget.theta, FEASIBILITY_TOL),
        beamformers: bf,
        status: SolveStatus::Converged,
        iterations: 0,
        flags: vec![],
        wall_time_s: 0.0,
    })
}

/// Channels and targets a scheme is evaluated on.
pub fn scheme_setup(kind: SchemeKind, ch: &ChannelSet, budget: &LinkBudget) -> Result<(ChannelSet, LinkBudget)> {
    let ch = if kind.uses_ideal_channels() { make_ideal(ch) } else { ch.clone() };
    let budget = if kind.is_half_duplex() {
        budget.with_theta([hd_target(budget.theta[0])?, hd_target(budget.theta[1])?])
    } else {
        *budget
    };
    Ok((ch, budget))
}

/// Runs one scheme from the initialization point on its own channel set.
pub fn run_scheme(kind: SchemeKind, ch: &ChannelSet, budget: &LinkBudget, cfg: &AoConfig) -> Result<SolveReport> {
    let (ch, budget) = scheme_setup(kind, ch, budget)?;
    match kind {
        SchemeKind::ZfFd => zf_ao(&ch, &budget, cfg),
        SchemeKind::FdBaseline | SchemeKind::HalfDuplexBaseline => {
            let bf = init_beamformers(&ch, &budget)?;
            baseline_report(kind, &ch, &budget, bf)
        }
        SchemeKind::ProposedFd | SchemeKind::IdealFd | SchemeKind::HalfDuplexAo => {
            let bf = init_beamformers(&ch, &budget)?;
            run_ao_as(kind, &ch, &budget, cfg, bf)
        }
    }
}
