//! Successive convex approximation for the relay transmit (`v`) and relay
//! receive (`w`) updates.
//!
//! Both updates share one shape once the other variables are fixed:
//!
//! ```text
//! minimize   c * ||S x||^2 / (1 - |l^H x|^2)
//! subject to x^H Phi_i x >= sum_k C_ik |l^H x|^2 |p_k^H x|^2 + ||T_i x||^2 + e_i,   i = 1, 2
//! ```
//!
//! The fractional objective becomes `||S x||^2 <= mu * xi`, `mu + |l^H x|^2 <= 1`;
//! each quartic product gets a slack `lambda_k` split by the rotated cone
//! `|l^H x|^2 <= lambda_k rho_k` together with `|p_k^H x|^2 <= 1 / rho_k`.
//! The two concave pieces, `x^H Phi_i x` on the left and `1 / rho_k`, are
//! replaced by their tangent minorants around the previous iterate, so each
//! convex step is a conservative restriction of the original problem and
//! the objective sequence cannot increase.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conic::{solve_checked, Affine, ComplexBlock, ConeProgram};
use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sq, random_unit, CMat, CVec, C64};
use crate::model::{uplink_gain, BeamformerSet, ChannelSet, LinkBudget, User};

/// Lower bound on `mu`, keeping the loop gain strictly below one.
pub const MU_FLOOR: f64 = 1e-8;

/// Original-constraint slack (relative) below which a step is rejected.
pub const ACCEPT_SLACK: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaOptions {
    pub max_iters: usize,
    pub tol_rel: f64,
    pub solver_tol: f64,
    /// Relative objective increase tolerated as solver noise.
    pub monotonicity_slack: f64,
}

impl Default for ScaOptions {
    fn default() -> Self {
        ScaOptions { max_iters: 20, tol_rel: 1e-4, solver_tol: 1e-8, monotonicity_slack: 1e-7 }
    }
}

/// Fixed quantities of the `v` update.
#[derive(Debug, Clone, PartialEq)]
pub struct VSubproblemData {
    /// `|w^H H_iR f_i|^2`
    pub g_ur: [f64; 2],
    /// `|u_i^H H_ii f_i|^2`
    pub g_self: [f64; 2],
    /// `H_Ri^H u_i`
    pub g_rd: [CVec; 2],
    /// `H_RR^H w`
    pub g_rr: CVec,
    pub w_norm2: f64,
    pub sigma2: f64,
    pub theta: [f64; 2],
}

impl VSubproblemData {
    pub fn from_state(bf: &BeamformerSet, ch: &ChannelSet, budget: &LinkBudget) -> Self {
        let per_user = |user: User| {
            let self_int = inner(bf.u(user), &(ch.self_interference(user) * bf.f(user))).norm_sqr();
            (uplink_gain(bf, ch, user), self_int, ch.downlink(user).adjoint() * bf.u(user))
        };
        let (a1, s1, d1) = per_user(User::First);
        let (a2, s2, d2) = per_user(User::Second);
        VSubproblemData {
            g_ur: [a1, a2],
            g_self: [s1, s2],
            g_rd: [d1, d2],
            g_rr: ch.h_rr.adjoint() * &bf.w,
            w_norm2: norm_sq(&bf.w),
            sigma2: budget.sigma2,
            theta: budget.theta,
        }
    }

    fn problem(&self) -> QuarticProblem {
        let m = self.g_rr.len();
        let quad = |i: usize| {
            let s = C64::from((self.theta[i] * self.sigma2 * self.w_norm2).sqrt());
            CMat::from_row_slice(1, m, self.g_rd[i].adjoint().as_slice()) * s
        };
        let k = |i: usize| self.theta[i] * (self.g_ur[0] + self.g_ur[1]) + self.g_ur[1 - i];
        QuarticProblem {
            cost: CMat::identity(m, m),
            cost_scale: self.g_ur[0] + self.g_ur[1] + self.sigma2 * self.w_norm2,
            loop_vec: self.g_rr.clone(),
            phi: [build_phi(self, User::First), build_phi(self, User::Second)],
            pairs: self.g_rd.clone(),
            coupling: [[k(0), 0.0], [0.0, k(1)]],
            quad: [quad(0), quad(1)],
            offset: [
                self.theta[0] * (self.g_self[0] + self.sigma2),
                self.theta[1] * (self.g_self[1] + self.sigma2),
            ],
        }
    }

    /// Relative slack of the original quartic SINR constraint of `user` at `v`.
    pub fn constraint_slack(&self, user: User, v: &CVec) -> f64 {
        self.problem().slack(user.index(), v)
    }

    /// Relay power as a function of `v` with everything else fixed.
    pub fn objective(&self, v: &CVec) -> f64 {
        self.problem().objective(v)
    }
}

/// Fixed quantities of the `w` update.
#[derive(Debug, Clone, PartialEq)]
pub struct WSubproblemData {
    /// `H_iR f_i`
    pub q_ur: [CVec; 2],
    /// `|u_i^H H_ii f_i|^2`
    pub q_self: [f64; 2],
    /// `|u_i^H H_Ri v|^2`
    pub q_rd: [f64; 2],
    /// `H_RR v`
    pub q_rr: CVec,
    pub v_norm2: f64,
    pub sigma2: f64,
    pub theta: [f64; 2],
}

impl WSubproblemData {
    pub fn from_state(bf: &BeamformerSet, ch: &ChannelSet, budget: &LinkBudget) -> Self {
        let per_user = |user: User| {
            let self_int = inner(bf.u(user), &(ch.self_interference(user) * bf.f(user))).norm_sqr();
            let down = inner(bf.u(user), &(ch.downlink(user) * &bf.v)).norm_sqr();
            (ch.uplink(user) * bf.f(user), self_int, down)
        };
        let (q1, s1, d1) = per_user(User::First);
        let (q2, s2, d2) = per_user(User::Second);
        WSubproblemData {
            q_ur: [q1, q2],
            q_self: [s1, s2],
            q_rd: [d1, d2],
            q_rr: &ch.h_rr * &bf.v,
            v_norm2: norm_sq(&bf.v),
            sigma2: budget.sigma2,
            theta: budget.theta,
        }
    }

    fn problem(&self) -> QuarticProblem {
        let n = self.q_rr.len();
        let mut cost = CMat::zeros(2 + n, n);
        for (r, q) in self.q_ur.iter().enumerate() {
            cost.row_mut(r).copy_from(&q.adjoint());
        }
        let sigma = C64::from(self.sigma2.sqrt());
        for k in 0..n {
            cost[(2 + k, k)] = sigma;
        }
        let phi = |i: usize| {
            let q = &self.q_ur[1 - i];
            q * q.adjoint() * C64::from(self.q_rd[i])
                + &self.q_rr * self.q_rr.adjoint() * C64::from(self.theta[i] * (self.q_self[i] + self.sigma2))
        };
        let quad = |i: usize| CMat::identity(n, n) * C64::from((self.theta[i] * self.sigma2 * self.q_rd[i]).sqrt());
        let coupling = |i: usize| {
            let mut c = [self.q_rd[i] * self.theta[i]; 2];
            c[1 - i] += self.q_rd[i];
            c
        };
        QuarticProblem {
            cost,
            cost_scale: self.v_norm2,
            loop_vec: self.q_rr.clone(),
            phi: [phi(0), phi(1)],
            pairs: self.q_ur.clone(),
            coupling: [coupling(0), coupling(1)],
            quad: [quad(0), quad(1)],
            offset: [
                self.theta[0] * (self.q_self[0] + self.sigma2),
                self.theta[1] * (self.q_self[1] + self.sigma2),
            ],
        }
    }

    pub fn constraint_slack(&self, user: User, w: &CVec) -> f64 {
        self.problem().slack(user.index(), w)
    }

    /// Relay power as a function of `w` with everything else fixed.
    pub fn objective(&self, w: &CVec) -> f64 {
        self.problem().objective(w)
    }
}

/// `Phi_i = g_{3-i,R} g_Ri g_Ri^H + theta_i (g_ii + sigma^2) g_RR g_RR^H`.
pub fn build_phi(data: &VSubproblemData, user: User) -> CMat {
    let i = user.index();
    let g = &data.g_rd[i];
    g * g.adjoint() * C64::from(data.g_ur[1 - i])
        + &data.g_rr * data.g_rr.adjoint() * C64::from(data.theta[i] * (data.g_self[i] + data.sigma2))
}

/// Tangent minorant of `v^H Phi v` at `v_ref`.
pub fn minorant_upsilon(phi: &CMat, v_ref: &CVec, v: &CVec) -> f64 {
    let phi_ref = phi * v_ref;
    2.0 * inner(&phi_ref, v).re - inner(v_ref, &phi_ref).re
}

/// Tangent minorant of `1 / rho` at `rho_ref`.
pub fn minorant_delta(rho_ref: f64, rho: f64) -> Result<f64> {
    if !(rho_ref > 0.0 && rho > 0.0) {
        return Err(Error::Domain(format!("minorant of 1/rho needs positive arguments, got {rho_ref}, {rho}")));
    }
    Ok(2.0 / rho_ref - rho / (rho_ref * rho_ref))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantSample {
    pub which: String,
    pub minorant: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantReport {
    pub samples: usize,
    pub failures: Vec<MinorantSample>,
    pub tangency_error: f64,
    pub gradient_rel_error: f64,
    pub passed: bool,
}

pub const TANGENCY_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-5;

/// Checks that both minorants lie below their functions on random samples,
/// touch them at the reference, and share their gradient there (central
/// differences). The steps are relative to `||v_ref||` and `rho_ref`.
pub fn minorant_diagnostics<R: Rng + ?Sized>(
    phi: &CMat,
    v_ref: &CVec,
    rho_ref: f64,
    samples: usize,
    fd_step: f64,
    rng: &mut R,
) -> MinorantReport {
    let exact_ups = |v: &CVec| inner(v, &(phi * v)).re;
    let exact_del = |r: f64| 1.0 / r;
    let scale = exact_ups(v_ref).abs() + phi.norm() * norm_sq(v_ref);
    let mut failures = vec![];

    let ref_norm = v_ref.norm().max(1e-300);
    for _ in 0..samples {
        let radius = ref_norm * 10f64.powf(rng.random_range(-2.0..1.0));
        let v = v_ref + random_unit(rng, v_ref.len()) * C64::from(radius);
        let (m, e) = (minorant_upsilon(phi, v_ref, &v), exact_ups(&v));
        if m > e + 1e-12 * (scale + e.abs()) {
            failures.push(MinorantSample { which: "upsilon".into(), minorant: m, exact: e });
        }
        let rho = rho_ref * 10f64.powf(rng.random_range(-3.0..3.0));
        let (m, e) = (minorant_delta(rho_ref, rho).unwrap_or(f64::NAN), exact_del(rho));
        if !(m <= e + 1e-12 * e.abs()) {
            failures.push(MinorantSample { which: "delta".into(), minorant: m, exact: e });
        }
    }

    let tangency_ups = (minorant_upsilon(phi, v_ref, v_ref) - exact_ups(v_ref)).abs() / scale.max(1e-300);
    let tangency_del =
        (minorant_delta(rho_ref, rho_ref).unwrap_or(f64::NAN) - exact_del(rho_ref)).abs() * rho_ref;
    let tangency_error = if scale == 0.0 { tangency_del } else { tangency_ups.max(tangency_del) };

    // gradients over the 2n real coordinates of v, then d/drho
    let h = fd_step * ref_norm;
    let n = v_ref.len();
    let (mut diff2, mut norm2) = (0.0, 0.0);
    for k in 0..2 * n {
        let mut e = CVec::zeros(n);
        e[k % n] = if k < n { C64::new(h, 0.0) } else { C64::new(0.0, h) };
        let plus = v_ref + &e;
        let minus = v_ref - &e;
        let g_min = (minorant_upsilon(phi, v_ref, &plus) - minorant_upsilon(phi, v_ref, &minus)) / (2.0 * h);
        let g_ex = (exact_ups(&plus) - exact_ups(&minus)) / (2.0 * h);
        diff2 += (g_min - g_ex).powi(2);
        norm2 += g_ex * g_ex;
    }
    let ups_grad_err = if norm2 > 0.0 { (diff2 / norm2).sqrt() } else { diff2.sqrt() };
    let hr = fd_step * rho_ref;
    let g_min = (minorant_delta(rho_ref, rho_ref + hr).unwrap_or(f64::NAN)
        - minorant_delta(rho_ref, rho_ref - hr).unwrap_or(f64::NAN))
        / (2.0 * hr);
    let g_ex = (exact_del(rho_ref + hr) - exact_del(rho_ref - hr)) / (2.0 * hr);
    let del_grad_err = ((g_min - g_ex) / g_ex).abs();
    let gradient_rel_error = ups_grad_err.max(del_grad_err);

    let passed = failures.is_empty() && tangency_error <= TANGENCY_TOL && gradient_rel_error <= GRADIENT_TOL;
    MinorantReport { samples, failures, tangency_error, gradient_rel_error, passed }
}

/// Common form of the two relay subproblems (see module docs).
#[derive(Debug, Clone)]
struct QuarticProblem {
    cost: CMat,
    cost_scale: f64,
    loop_vec: CVec,
    phi: [CMat; 2],
    pairs: [CVec; 2],
    coupling: [[f64; 2]; 2],
    quad: [CMat; 2],
    offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaStep {
    pub x: CVec,
    pub rho: [f64; 2],
    /// Optimal epigraph variable, in units of `||S x||^2 / (1 - |l^H x|^2)`.
    pub xi: f64,
    /// `cost_scale * xi`: the step's upper bound on the true objective.
    pub bound: f64,
    /// True objective at `x`.
    pub objective: f64,
}

impl QuarticProblem {
    fn loop_sq(&self, x: &CVec) -> f64 {
        inner(&self.loop_vec, x).norm_sqr()
    }

    fn objective(&self, x: &CVec) -> f64 {
        let den = 1.0 - self.loop_sq(x);
        if den <= 0.0 {
            return f64::INFINITY;
        }
        self.cost_scale * norm_sq(&(&self.cost * x)) / den
    }

    /// Relative slack of constraint `i`, normalized by its constant term.
    fn slack(&self, i: usize, x: &CVec) -> f64 {
        let lhs = inner(x, &(&self.phi[i] * x)).re;
        let l2 = self.loop_sq(x);
        let quartic: f64 = (0..2).map(|k| self.coupling[i][k] * l2 * inner(&self.pairs[k], x).norm_sqr()).sum();
        let rhs = quartic + norm_sq(&(&self.quad[i] * x)) + self.offset[i];
        (lhs - rhs) / self.offset[i]
    }

    fn min_slack(&self, x: &CVec) -> f64 {
        self.slack(0, x).min(self.slack(1, x))
    }

    /// One convex restriction around `(x_ref, rho_ref)`, built in units where
    /// `x_ref` has unit norm, the reference objective is one, and each
    /// constraint and slack pair is normalized at the reference.
    fn step(&self, x_ref: &CVec, rho_ref: [f64; 2], solver_tol: f64) -> Result<ScaStep> {
        let n = x_ref.len();
        let s = x_ref.norm();
        let xi_ref = norm_sq(&(&self.cost * x_ref)) / (1.0 - self.loop_sq(x_ref)).max(MU_FLOOR);
        if !(s > 0.0 && xi_ref > 0.0 && xi_ref.is_finite()) {
            return Err(Error::DegenerateDirection("reference iterate has zero cost".into()));
        }
        let sc = C64::from(s);
        let y_ref = x_ref / sc;
        let cost = &self.cost * C64::from(s / xi_ref.sqrt());
        let l = &self.loop_vec * sc;
        let r: [f64; 2] = [inner(&self.pairs[0], x_ref).norm_sqr(), inner(&self.pairs[1], x_ref).norm_sqr()];
        if r.iter().any(|&rk| rk < 1e-24) {
            return Err(Error::DegenerateDirection("pair vector orthogonal to the reference".into()));
        }
        let pairs = [&self.pairs[0] * C64::from(s / r[0].sqrt()), &self.pairs[1] * C64::from(s / r[1].sqrt())];
        let rho_hat_ref = [rho_ref[0] * r[0], rho_ref[1] * r[1]];

        let blk = ComplexBlock::new(0, n);
        let xi = blk.end();
        let mu = xi + 1;
        let rho_idx = [mu + 1, mu + 2];
        let lam_idx = [mu + 3, mu + 4];
        let nv = mu + 5;
        let mut prog = ConeProgram::new(nv);
        let mut c = vec![0.0; nv];
        c[xi] = 1.0;
        prog.set_objective(c)?;

        let one = Affine::constant(nv, 1.0);
        let cost_rows = blk.matrix_rows(&cost, nv)?;
        let zeros = |rows: &Vec<Vec<f64>>| vec![0.0; rows.len()];
        prog.add_rsoc(cost_rows.clone(), zeros(&cost_rows), Affine::var(nv, xi), Affine::var(nv, mu))?;
        let loop_rows = blk.quad_norm_rows(&l, nv)?;
        let mut one_minus_mu = Affine::constant(nv, 1.0);
        one_minus_mu.row[mu] = -1.0;
        prog.add_rsoc(loop_rows.clone(), vec![0.0; 2], one_minus_mu, one.clone())?;
        prog.add_ge(&Affine::var(nv, mu), &Affine::constant(nv, MU_FLOOR))?;

        for k in 0..2 {
            prog.add_rsoc(loop_rows.clone(), vec![0.0; 2], Affine::var(nv, lam_idx[k]), Affine::var(nv, rho_idx[k]))?;
            // |p_k^H y|^2 <= 2 / rho_ref - rho / rho_ref^2
            let mut tangent = Affine::constant(nv, 2.0 / rho_hat_ref[k]);
            tangent.row[rho_idx[k]] = -1.0 / (rho_hat_ref[k] * rho_hat_ref[k]);
            prog.add_rsoc(blk.quad_norm_rows(&pairs[k], nv)?, vec![0.0; 2], tangent, one.clone())?;
        }

        for i in 0..2 {
            let e = self.offset[i];
            let phi = &self.phi[i] * C64::from(s * s / e);
            let phi_y = &phi * &y_ref;
            // linearized x^H Phi x minus coupled slacks minus the constant
            let mut rhs = Affine::new(blk.real_part_row(&phi_y, nv)?, -inner(&y_ref, &phi_y).re - 1.0);
            for v in rhs.row.iter_mut().take(blk.end()) {
                *v *= 2.0;
            }
            for k in 0..2 {
                rhs.row[lam_idx[k]] -= self.coupling[i][k] * r[k] / e;
            }
            let quad = &self.quad[i] * C64::from(s / e.sqrt());
            let rows = blk.matrix_rows(&quad, nv)?;
            prog.add_rsoc(rows.clone(), zeros(&rows), rhs, one.clone())?;
        }

        let sol = solve_checked(&prog, solver_tol, "relay SCA step")?;
        let y = blk.extract(&sol.x);
        let x = y * sc;
        let rho = [sol.x[rho_idx[0]] / r[0], sol.x[rho_idx[1]] / r[1]];
        let xi_val = sol.x[xi] * xi_ref;
        Ok(ScaStep { objective: self.objective(&x), bound: self.cost_scale * xi_val, xi: xi_val, rho, x })
    }

    fn run(&self, x_init: &CVec, opts: &ScaOptions) -> Result<ScaState> {
        let mut x = x_init.clone();
        for k in 0..2 {
            if inner(&self.pairs[k], &x).norm() < 1e-12 {
                // nudge off the degenerate point along the offending direction
                let p = &self.pairs[k];
                let pn = p.norm();
                if pn == 0.0 {
                    return Err(Error::DegenerateDirection(format!("pair vector {k} is zero")));
                }
                x += p * C64::from(1e-6 * x.norm().max(1.0) / pn);
                if self.min_slack(&x) < ACCEPT_SLACK {
                    return Err(Error::DegenerateDirection(format!(
                        "start orthogonal to pair vector {k} and perturbation is infeasible"
                    )));
                }
            }
        }
        let tight = |x: &CVec| [1.0 / inner(&self.pairs[0], x).norm_sqr(), 1.0 / inner(&self.pairs[1], x).norm_sqr()];
        let mut rho = tight(&x);
        let mut state = ScaState {
            objective: vec![self.objective(&x)],
            bound: vec![],
            iterations: 0,
            stop: ScaStop::MaxIters,
            iterate: x.clone(),
            rho,
            path: vec![x.clone()],
        };
        for it in 0..opts.max_iters {
            let step = match self.step(&x, rho, opts.solver_tol) {
                Ok(step) => step,
                Err(Error::NumericFailure(m)) if it > 0 => {
                    state.stop = ScaStop::SolverFailed(format!("iteration {}: {m}", it + 1));
                    break;
                }
                Err(e) => return Err(e.context(format!("SCA iteration {}", it + 1))),
            };
            let prev = *state.objective.last().expect("trajectory starts with the initial value");
            if !(step.objective <= prev * (1.0 + opts.monotonicity_slack)) {
                state.stop = ScaStop::Rejected(format!("objective rose from {prev:.6e} to {:.6e}", step.objective));
                break;
            }
            let slack = self.min_slack(&step.x);
            if slack < ACCEPT_SLACK {
                state.stop = ScaStop::Rejected(format!("original constraint slack {slack:.3e}"));
                break;
            }
            // the tight slack keeps the next reference feasible and well scaled
            x = step.x;
            rho = tight(&x);
            state.iterations += 1;
            state.objective.push(step.objective);
            state.bound.push(step.bound);
            state.iterate = x.clone();
            state.rho = rho;
            state.path.push(x.clone());
            if (prev - step.objective) <= opts.tol_rel * prev.abs() {
                state.stop = ScaStop::Converged;
                break;
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScaStop {
    Converged,
    MaxIters,
    /// A step was discarded (objective increase beyond solver noise or an
    /// original constraint violated); the previous iterate is kept.
    Rejected(String),
    /// The conic solver failed after at least one accepted step.
    SolverFailed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    pub iterate: CVec,
    pub rho: [f64; 2],
    /// True objective, starting with the value at the initial point.
    pub objective: Vec<f64>,
    /// Epigraph bound `cost_scale * xi` reported by each accepted step.
    pub bound: Vec<f64>,
    pub iterations: usize,
    pub stop: ScaStop,
    /// Start point followed by every accepted iterate.
    pub path: Vec<CVec>,
}

/// Solves one convex restriction of the `v` update around `(v_ref, rho_ref)`.
pub fn solve_v_step(data: &VSubproblemData, v_ref: &CVec, rho_ref: [f64; 2], solver_tol: f64) -> Result<ScaStep> {
    data.problem().step(v_ref, rho_ref, solver_tol).map_err(|e| e.context("v update"))
}

pub fn sca_v(data: &VSubproblemData, v_init: &CVec, opts: &ScaOptions) -> Result<ScaState> {
    data.problem().run(v_init, opts).map_err(|e| e.context("v update"))
}

/// Solves one convex restriction of the `w` update around `(w_ref, rho_ref)`.
pub fn solve_w_step(data: &WSubproblemData, w_ref: &CVec, rho_ref: [f64; 2], solver_tol: f64) -> Result<ScaStep> {
    data.problem().step(w_ref, rho_ref, solver_tol).map_err(|e| e.context("w update"))
}

pub fn sca_w(data: &WSubproblemData, w_init: &CVec, opts: &ScaOptions) -> Result<ScaState> {
    data.problem().run(w_init, opts).map_err(|e| e.context("w update"))
}
