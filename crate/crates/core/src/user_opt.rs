//! User-side updates: the transmit beamformers (one SOCP, solved exactly)
//! and the MMSE receive filters (closed form).

use crate::conic::{solve_checked, Affine, ComplexBlock, ConeProgram};
use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sq, CVec, C64};
use crate::model::{loop_gain, BeamformerSet, ChannelSet, LinkBudget, User};

/// Fixed quantities of the user transmit update.
#[derive(Debug, Clone, PartialEq)]
pub struct FSubproblemData {
    /// `H_iR^H w`
    pub a_ur: [CVec; 2],
    /// `H_ii^H u_i`
    pub a_self: [CVec; 2],
    /// `|u_i^H H_Ri v|^2`
    pub a_rd: [f64; 2],
    /// `|w^H H_RR v|^2`
    pub a_rr: f64,
    pub v_norm2: f64,
    pub w_norm2: f64,
    pub sigma2: f64,
    pub theta: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FSolution {
    pub f: [CVec; 2],
    /// Total power with `v`, `w`, `u` fixed, constant noise term included.
    pub objective: f64,
    /// Scale factor (>= 1) applied after the solve to make the quadratic
    /// constraints hold exactly; 1 when no repair was needed.
    pub repair: f64,
}

impl FSubproblemData {
    pub fn from_state(bf: &BeamformerSet, ch: &ChannelSet, budget: &LinkBudget) -> Self {
        let a_ur = |u: User| ch.uplink(u).adjoint() * &bf.w;
        let a_self = |u: User| ch.self_interference(u).adjoint() * bf.u(u);
        let a_rd = |u: User| inner(bf.u(u), &(ch.downlink(u) * &bf.v)).norm_sqr();
        let g = loop_gain(&bf.w, &bf.v, &ch.h_rr);
        FSubproblemData {
            a_ur: [a_ur(User::First), a_ur(User::Second)],
            a_self: [a_self(User::First), a_self(User::Second)],
            a_rd: [a_rd(User::First), a_rd(User::Second)],
            a_rr: g * g,
            v_norm2: norm_sq(&bf.v),
            w_norm2: norm_sq(&bf.w),
            sigma2: budget.sigma2,
            theta: budget.theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.a_rr) {
            return Err(Error::Domain(format!("loop power {} outside [0, 1)", self.a_rr)));
        }
        let scalars = [self.a_rd[0], self.a_rd[1], self.v_norm2, self.w_norm2, self.sigma2];
        if scalars.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("negative or non-finite scalar in transmit subproblem".into()));
        }
        if self.a_ur[0].len() != self.a_self[0].len() || self.a_ur[1].len() != self.a_self[1].len() {
            return Err(Error::DimensionMismatch("uplink and self-interference vectors differ in length".into()));
        }
        Ok(())
    }

    fn a(&self, user: User) -> &CVec {
        &self.a_ur[user.index()]
    }

    fn relay_gain(&self) -> f64 {
        self.v_norm2 / (1.0 - self.a_rr)
    }

    /// Total transmit power as a function of `(f_1, f_2)`.
    pub fn objective(&self, f: &[CVec; 2]) -> f64 {
        let fwd: f64 = User::BOTH.iter().map(|&u| inner(self.a(u), &f[u.index()]).norm_sqr()).sum();
        self.relay_gain() * (fwd + self.sigma2 * self.w_norm2) + norm_sq(&f[0]) + norm_sq(&f[1])
    }

    /// `(signal, interference-plus-noise)` of the SINR constraint of `user`,
    /// both multiplied through by `1 - a_RR`.
    fn constraint_terms(&self, user: User, f: &[CVec; 2]) -> (f64, f64) {
        let i = user.index();
        let o = user.other().index();
        let c = self.a_rd[i];
        let fwd = |k: usize| inner(&self.a_ur[k], &f[k]).norm_sqr();
        let si = inner(&self.a_self[i], &f[i]).norm_sqr();
        let signal = (1.0 - self.a_rr) * c * fwd(o);
        let homog = self.theta[i] * (c * self.a_rr * (fwd(0) + fwd(1)) + (1.0 - self.a_rr) * si);
        (signal - homog, self.constant_sq(user))
    }

    fn constant_sq(&self, user: User) -> f64 {
        let i = user.index();
        self.theta[i] * self.sigma2 * ((1.0 - self.a_rr) + self.a_rd[i] * self.w_norm2)
    }

    /// Relative slack of the original quadratic constraint of `user`.
    pub fn constraint_slack(&self, user: User, f: &[CVec; 2]) -> f64 {
        let (net, constant) = self.constraint_terms(user, f);
        (net - constant) / constant
    }
}

/// Minimizes total power over `(f_1, f_2)` with the other blocks fixed.
///
/// The SINR constraints are written as second-order cones after fixing the
/// phase of each forwarded signal so that `a_{3-i,R}^H f_{3-i}` is real.
pub fn solve_f(data: &FSubproblemData, solver_tol: f64) -> Result<FSolution> {
    data.validate()?;
    let a = &data.a_ur;
    let a_self = &data.a_self;
    let dims = [a[0].len(), a[1].len()];
    for u in User::BOTH {
        let (i, o) = (u.index(), u.other().index());
        if data.a_rd[i] <= 1e-300 || a[o].norm() <= 1e-300 {
            return Err(Error::Infeasible(format!("user {} cannot be served: zero end-to-end gain", i + 1)));
        }
    }

    // work in units where each f is O(1) and each constraint constant is 1
    let need = |u: User| {
        let (i, o) = (u.index(), u.other().index());
        data.constant_sq(u) / ((1.0 - data.a_rr) * data.a_rd[i] * norm_sq(&a[o]))
    };
    let s = (need(User::First) + need(User::Second)).sqrt();
    let gain = data.relay_gain();
    let obj_scale = s * s * (1.0 + gain * norm_sq(&a[0]).max(norm_sq(&a[1])));

    let blocks = [ComplexBlock::new(0, dims[0]), ComplexBlock::new(2 * dims[0], dims[1])];
    let t = blocks[1].end();
    let nv = t + 1;
    let mut prog = ConeProgram::new(nv);
    let mut c = vec![0.0; nv];
    c[t] = 1.0;
    prog.set_objective(c)?;

    let mut cost_rows = vec![];
    let row_scale = s / obj_scale.sqrt();
    for k in 0..2 {
        cost_rows.extend(blocks[k].quad_norm_rows(&(&a[k] * C64::from(row_scale * gain.sqrt())), nv)?);
        let mut id = blocks[k].identity_rows(nv);
        for r in id.iter_mut() {
            for x in r.iter_mut() {
                *x *= row_scale;
            }
        }
        cost_rows.extend(id);
    }
    let d = vec![0.0; cost_rows.len()];
    prog.add_rsoc(cost_rows, d, Affine::var(nv, t), Affine::constant(nv, 1.0))?;

    for u in User::BOTH {
        let (i, o) = (u.index(), u.other().index());
        let k0 = data.constant_sq(u).sqrt();
        let sc = s / k0;
        let cross = data.theta[i] * data.a_rd[i] * data.a_rr;
        let mut rows = vec![];
        for k in 0..2 {
            rows.extend(blocks[k].quad_norm_rows(&(&a[k] * C64::from(sc * cross.sqrt())), nv)?);
        }
        let si = data.theta[i] * (1.0 - data.a_rr);
        rows.extend(blocks[i].quad_norm_rows(&(&a_self[i] * C64::from(sc * si.sqrt())), nv)?);
        let mut dvec = vec![0.0; rows.len()];
        rows.push(vec![0.0; nv]);
        dvec.push(1.0);
        let lead = ((1.0 - data.a_rr) * data.a_rd[i]).sqrt() * sc;
        let g = blocks[o].real_part_row(&(&a[o] * C64::from(lead)), nv)?;
        prog.add_soc(rows, dvec, g, 0.0)?;
    }

    let sol = solve_checked(&prog, solver_tol, "user transmit update")?;
    let sc = C64::from(s);
    let mut f = [blocks[0].extract(&sol.x) * sc, blocks[1].extract(&sol.x) * sc];

    // scale up so the quadratic constraints hold exactly
    let mut repair: f64 = 1.0;
    for u in User::BOTH {
        let (net, constant) = data.constraint_terms(u, &f);
        if net < constant {
            if net <= 0.0 {
                return Err(Error::Infeasible(format!("user {} constraint has no positive margin", u.index() + 1)));
            }
            repair = repair.max((constant / net).sqrt() * (1.0 + 1e-12));
        }
    }
    if repair > 1.0 {
        for fk in f.iter_mut() {
            *fk *= C64::from(repair);
        }
    }
    Ok(FSolution { objective: data.objective(&f), f, repair })
}

/// MMSE receive filter `(sigma^2 I + h h^H)^{-1} b`, normalized, where `b` is
/// the desired-signal direction and `h` the self-interference direction.
pub fn mmse_u(h_desired: &CVec, h_self: &CVec, sigma2: f64) -> Result<CVec> {
    if h_desired.len() != h_self.len() {
        return Err(Error::DimensionMismatch(format!(
            "desired direction has length {}, self-interference {}",
            h_desired.len(),
            h_self.len()
        )));
    }
    if h_desired.norm() < 1e-14 {
        return Err(Error::DegenerateDirection("desired direction is numerically zero".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    // Sherman-Morrison; the 1/sigma^2 factor drops out in the normalization
    let coef = inner(h_self, h_desired) / C64::from(sigma2 + norm_sq(h_self));
    let x = h_desired - h_self * coef;
    let n = x.norm();
    if n < 1e-300 {
        return Err(Error::DegenerateDirection("MMSE filter vanished".into()));
    }
    Ok(x / C64::from(n))
}

/// MMSE receiver of `user` for the current relay and user transmit beamformers.
pub fn mmse_u_for(user: User, bf: &BeamformerSet, ch: &ChannelSet, sigma2: f64) -> Result<CVec> {
    let b = ch.downlink(user) * &bf.v;
    let h = ch.self_interference(user) * bf.f(user);
    mmse_u(&b, &h, sigma2).map_err(|e| e.context(format!("receiver of user {}", user.index() + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_vector, random_unit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_data(sigma2: f64, a_rd: f64, theta: f64) -> FSubproblemData {
        FSubproblemData {
            a_ur: [CVec::from_element(1, C64::new(0.8, 0.3)), CVec::from_element(1, C64::new(-0.5, 0.9))],
            a_self: [CVec::zeros(1), CVec::zeros(1)],
            a_rd: [a_rd, a_rd],
            a_rr: 0.0,
            v_norm2: 2.0,
            w_norm2: 1.0,
            sigma2,
            theta: [theta, theta],
        }
    }

    #[test]
    fn scalar_channels_match_hand_solution() {
        let data = scalar_data(1e-2, 0.7, 3.0);
        let sol = solve_f(&data, 1e-9).unwrap();
        for u in User::BOTH {
            let o = u.other().index();
            let a_abs2 = data.a_ur[o][0].norm_sqr();
            // Re(a f) >= sqrt(theta (sigma2 + a_R sigma2) / a_R), f along a
            let need = 3.0 * (1e-2 + 0.7 * 1e-2) / 0.7 / a_abs2;
            assert!((norm_sq(&sol.f[o]) - need).abs() < 1e-6 * need, "{} vs {need}", norm_sq(&sol.f[o]));
        }
    }

    #[test]
    fn doubling_noise_doubles_power() {
        let one = solve_f(&scalar_data(1e-3, 0.4, 2.0), 1e-9).unwrap();
        let two = solve_f(&scalar_data(2e-3, 0.4, 2.0), 1e-9).unwrap();
        for k in 0..2 {
            let r = norm_sq(&two.f[k]) / norm_sq(&one.f[k]);
            assert!((r - 2.0).abs() < 1e-6, "ratio {r}");
        }
    }

    #[test]
    fn mmse_matched_filter_without_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = cn_vector(&mut rng, 3, 1.0);
        let u = mmse_u(&b, &CVec::zeros(3), 1e-3).unwrap();
        let expect = &b / C64::from(b.norm());
        assert!((u - expect).norm() < 1e-12);
    }

    #[test]
    fn mmse_keeps_parallel_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_unit(&mut rng, 2);
        let h = &b * C64::new(0.0, 3.0);
        let u = mmse_u(&b, &h, 1e-2).unwrap();
        assert!((inner(&u, &b).norm() - 1.0).abs() < 1e-12);
        assert!((u.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mmse_rejects_zero_signal() {
        assert!(matches!(
            mmse_u(&CVec::zeros(2), &CVec::zeros(2), 1.0),
            Err(Error::DegenerateDirection(_))
        ));
    }
}
