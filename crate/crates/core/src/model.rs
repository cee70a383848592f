//! System model of the full-duplex two-way relay link: dimensions, channels,
//! beamformers, the closed-form relay power and SINR expressions, and
//! sample-level simulators of the relay feedback loop used to check them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cn_matrix, cn_vector, inner, norm_sq, CMat, CVec, C64};

/// Loop gain above which the sample-level simulators refuse to run.
pub const SIM_LOOP_LIMIT: f64 = 1.0 - 1e-3;

/// Unit-norm tolerance on the user receive filters.
pub const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum User {
    First,
    Second,
}

impl User {
    pub const BOTH: [User; 2] = [User::First, User::Second];

    pub fn index(self) -> usize {
        match self {
            User::First => 0,
            User::Second => 1,
        }
    }

    /// The partner user whose message this user decodes.
    pub fn other(self) -> User {
        match self {
            User::First => User::Second,
            User::Second => User::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub m_r: usize,
    pub m_1: usize,
    pub m_2: usize,
    pub n_r: usize,
    pub n_1: usize,
    pub n_2: usize,
}

impl SystemDims {
    pub fn new(m_r: usize, m_1: usize, m_2: usize, n_r: usize, n_1: usize, n_2: usize) -> Result<Self> {
        let dims = SystemDims { m_r, m_1, m_2, n_r, n_1, n_2 };
        dims.validate()?;
        Ok(dims)
    }

    /// (M_R, M_1, M_2) = (4, 2, 2), (N_R, N_1, N_2) = (2, 2, 2).
    pub fn reference() -> Self {
        SystemDims { m_r: 4, m_1: 2, m_2: 2, n_r: 2, n_1: 2, n_2: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m_r, self.m_1, self.m_2, self.n_r, self.n_1, self.n_2];
        if all.contains(&0) {
            return Err(Error::Config(format!("antenna counts must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn user_tx(&self, user: User) -> usize {
        match user {
            User::First => self.m_1,
            User::Second => self.m_2,
        }
    }

    pub fn user_rx(&self, user: User) -> usize {
        match user {
            User::First => self.n_1,
            User::Second => self.n_2,
        }
    }
}

/// Noise, targets and fading statistics. All powers in linear watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub sigma2: f64,
    pub theta: [f64; 2],
    pub rho: f64,
    pub kappa: f64,
}

impl LinkBudget {
    pub fn new(sigma2: f64, theta: [f64; 2], rho: f64, kappa: f64) -> Result<Self> {
        let b = LinkBudget { sigma2, theta, rho, kappa };
        b.validate()?;
        Ok(b)
    }

    /// rho = 1e-4, kappa = 0.1, sigma^2 = -30 dBm, common target `theta_db`.
    pub fn reference(theta_db: f64) -> Self {
        let theta = db_to_linear(theta_db);
        LinkBudget { sigma2: 1e-6, theta: [theta, theta], rho: 1e-4, kappa: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma2 > 0.0
            && self.sigma2.is_finite()
            && self.theta.iter().all(|&t| t > 0.0 && t.is_finite())
            && self.rho > 0.0
            && self.rho.is_finite()
            && (0.0..=1.0).contains(&self.kappa);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid link budget: {self:?}")))
        }
    }

    pub fn with_theta(mut self, theta: [f64; 2]) -> Self {
        self.theta = theta;
        self
    }

    pub fn target(&self, user: User) -> f64 {
        self.theta[user.index()]
    }
}

/// The seven channel matrices, including the residual self-interference
/// channels at the relay (`h_rr`) and at each user (`h_11`, `h_22`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_1r: CMat,
    pub h_2r: CMat,
    pub h_rr: CMat,
    pub h_r1: CMat,
    pub h_r2: CMat,
    pub h_11: CMat,
    pub h_22: CMat,
}

impl ChannelSet {
    /// Uplink channel from `user` into the relay receive array.
    pub fn uplink(&self, user: User) -> &CMat {
        match user {
            User::First => &self.h_1r,
            User::Second => &self.h_2r,
        }
    }

    /// Downlink channel from the relay transmit array to `user`.
    pub fn downlink(&self, user: User) -> &CMat {
        match user {
            User::First => &self.h_r1,
            User::Second => &self.h_r2,
        }
    }

    /// Residual self-interference channel at `user`.
    pub fn self_interference(&self, user: User) -> &CMat {
        match user {
            User::First => &self.h_11,
            User::Second => &self.h_22,
        }
    }

    pub fn dims(&self) -> SystemDims {
        SystemDims {
            m_r: self.h_rr.ncols(),
            m_1: self.h_1r.ncols(),
            m_2: self.h_2r.ncols(),
            n_r: self.h_rr.nrows(),
            n_1: self.h_r1.nrows(),
            n_2: self.h_r2.nrows(),
        }
    }

    pub fn validate(&self, dims: &SystemDims) -> Result<()> {
        let expect = [
            ("H_1R", &self.h_1r, dims.n_r, dims.m_1),
            ("H_2R", &self.h_2r, dims.n_r, dims.m_2),
            ("H_RR", &self.h_rr, dims.n_r, dims.m_r),
            ("H_R1", &self.h_r1, dims.n_1, dims.m_r),
            ("H_R2", &self.h_r2, dims.n_2, dims.m_r),
            ("H_11", &self.h_11, dims.n_1, dims.m_1),
            ("H_22", &self.h_22, dims.n_2, dims.m_2),
        ];
        for (name, m, r, c) in expect {
            if m.nrows() != r || m.ncols() != c {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Domain(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }
}

/// Relay transmit/receive filters and the user transmit/receive filters.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub v: CVec,
    pub w: CVec,
    pub f: [CVec; 2],
    pub u: [CVec; 2],
}

impl BeamformerSet {
    pub fn f(&self, user: User) -> &CVec {
        &self.f[user.index()]
    }

    pub fn u(&self, user: User) -> &CVec {
        &self.u[user.index()]
    }

    pub fn validate(&self, dims: &SystemDims) -> Result<()> {
        let expect = [
            ("v", self.v.len(), dims.m_r),
            ("w", self.w.len(), dims.n_r),
            ("f_1", self.f[0].len(), dims.m_1),
            ("f_2", self.f[1].len(), dims.m_2),
            ("u_1", self.u[0].len(), dims.n_1),
            ("u_2", self.u[1].len(), dims.n_2),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::DimensionMismatch(format!("{name} has length {got}, expected {want}")));
            }
        }
        Ok(())
    }
}

/// Draws all channels i.i.d. CN(0, rho); the three self-interference
/// channels are further scaled in amplitude by kappa.
pub fn generate_channels<R: Rng + ?Sized>(rng: &mut R, dims: &SystemDims, budget: &LinkBudget) -> ChannelSet {
    let rho = budget.rho;
    let h_1r = cn_matrix(rng, dims.n_r, dims.m_1, rho);
    let h_2r = cn_matrix(rng, dims.n_r, dims.m_2, rho);
    let h_r1 = cn_matrix(rng, dims.n_1, dims.m_r, rho);
    let h_r2 = cn_matrix(rng, dims.n_2, dims.m_r, rho);
    let k = C64::from(budget.kappa);
    let h_rr = cn_matrix(rng, dims.n_r, dims.m_r, rho) * k;
    let h_11 = cn_matrix(rng, dims.n_1, dims.m_1, rho) * k;
    let h_22 = cn_matrix(rng, dims.n_2, dims.m_2, rho) * k;
    ChannelSet { h_1r, h_2r, h_rr, h_r1, h_r2, h_11, h_22 }
}

/// `|w^H H_RR v|`.
pub fn loop_gain(w: &CVec, v: &CVec, h_rr: &CMat) -> f64 {
    inner(w, &(h_rr * v)).norm()
}

fn stable_denominator(bf: &BeamformerSet, ch: &ChannelSet) -> Result<f64> {
    let g = loop_gain(&bf.w, &bf.v, &ch.h_rr);
    if !(g < 1.0) {
        return Err(Error::LoopUnstable { gain: g, limit: 1.0 });
    }
    Ok(1.0 - g * g)
}

/// Power of the signal entering the relay's forward path, `|w^H H_iR f_i|^2`.
pub fn uplink_gain(bf: &BeamformerSet, ch: &ChannelSet, user: User) -> f64 {
    inner(&bf.w, &(ch.uplink(user) * bf.f(user))).norm_sqr()
}

/// Steady-state relay output power with the loop summed as a geometric series.
pub fn relay_power(bf: &BeamformerSet, ch: &ChannelSet, sigma2: f64) -> Result<f64> {
    let denom = stable_denominator(bf, ch)?;
    let forwarded = uplink_gain(bf, ch, User::First) + uplink_gain(bf, ch, User::Second) + sigma2 * norm_sq(&bf.w);
    Ok(norm_sq(&bf.v) * forwarded / denom)
}

pub fn total_power(bf: &BeamformerSet, ch: &ChannelSet, sigma2: f64) -> Result<f64> {
    Ok(relay_power(bf, ch, sigma2)? + norm_sq(&bf.f[0]) + norm_sq(&bf.f[1]))
}

/// Downlink SINR of `user`. The user's own symbol echoed through the relay
/// in the previous slot is known at that user and does not count as
/// interference; its loop-delayed copies do.
pub fn sinr(user: User, bf: &BeamformerSet, ch: &ChannelSet, sigma2: f64) -> Result<f64> {
    let denom = stable_denominator(bf, ch)?;
    let g2 = 1.0 - denom;
    let c = inner(bf.u(user), &(ch.downlink(user) * &bf.v)).norm_sqr();
    let desired = c * uplink_gain(bf, ch, user.other());
    let loop_term = c * g2 / denom * (uplink_gain(bf, ch, User::First) + uplink_gain(bf, ch, User::Second));
    let noise_fwd = sigma2 * c * norm_sq(&bf.w) / denom;
    let self_int = inner(bf.u(user), &(ch.self_interference(user) * bf.f(user))).norm_sqr();
    Ok(desired / (loop_term + noise_fwd + self_int + sigma2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub sinr: [f64; 2],
    pub targets: [f64; 2],
    /// `sinr_i - theta_i (1 - tol_rel)`; negative means violated.
    pub margin: [f64; 2],
    pub loop_gain: f64,
    pub unit_norm_error: [f64; 2],
    pub feasible: bool,
}

pub fn check_feasible(
    bf: &BeamformerSet,
    ch: &ChannelSet,
    sigma2: f64,
    targets: [f64; 2],
    tol_rel: f64,
) -> FeasibilityReport {
    let gain = loop_gain(&bf.w, &bf.v, &ch.h_rr);
    let stable = gain < 1.0;
    let mut s = [0.0; 2];
    let mut margin = [0.0; 2];
    let mut unit_err = [0.0; 2];
    let mut ok = stable;
    for user in User::BOTH {
        let i = user.index();
        s[i] = if stable { sinr(user, bf, ch, sigma2).unwrap_or(0.0) } else { 0.0 };
        margin[i] = s[i] - targets[i] * (1.0 - tol_rel);
        unit_err[i] = (bf.u[i].norm() - 1.0).abs();
        ok &= margin[i] >= 0.0 && unit_err[i] <= UNIT_NORM_TOL;
    }
    FeasibilityReport { sinr: s, targets, margin, loop_gain: gain, unit_norm_error: unit_err, feasible: ok }
}

/// Horizon of the sample-level loop simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_steps: usize,
    pub burn_in: usize,
}

impl SimConfig {
    pub fn new(n_steps: usize) -> Self {
        SimConfig { n_steps, burn_in: n_steps / 10 }
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_steps < 10 * self.burn_in {
            return Err(Error::Config(format!(
                "simulation needs n_steps >= 10 * burn_in (got {} / {})",
                self.n_steps, self.burn_in
            )));
        }
        Ok(())
    }
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let re = if rng.random::<bool>() { a } else { -a };
    let im = if rng.random::<bool>() { a } else { -a };
    C64::new(re, im)
}

fn check_sim_loop(bf: &BeamformerSet, ch: &ChannelSet) -> Result<C64> {
    let g = inner(&bf.w, &(&ch.h_rr * &bf.v));
    if g.norm() > SIM_LOOP_LIMIT {
        return Err(Error::LoopUnstable { gain: g.norm(), limit: SIM_LOOP_LIMIT });
    }
    Ok(g)
}

/// Runs the amplify-and-forward recursion sample by sample (one-sample
/// processing delay, unit-power QPSK symbols, fresh Gaussian noise) and
/// returns the time-averaged relay output power.
pub fn simulate_relay_power<R: Rng + ?Sized>(
    bf: &BeamformerSet,
    ch: &ChannelSet,
    sigma2: f64,
    sim: SimConfig,
    rng: &mut R,
) -> Result<f64> {
    sim.validate()?;
    check_sim_loop(bf, ch)?;
    let n_r = ch.h_rr.nrows();
    let q1 = &ch.h_1r * &bf.f[0];
    let q2 = &ch.h_2r * &bf.f[1];
    let loop_back = &ch.h_rr * &bf.v;
    let w_h = bf.w.adjoint();

    // x_R[n] = v * s[n-1] with s[n] = w^H r[n]
    let mut s_prev = C64::from(0.0);
    let mut acc = 0.0;
    let mut count = 0usize;
    for n in 0..sim.n_steps {
        let x_r = &bf.v * s_prev;
        if n >= sim.burn_in {
            acc += norm_sq(&x_r);
            count += 1;
        }
        let noise = cn_vector(rng, n_r, sigma2);
        let r = &q1 * qpsk(rng) + &q2 * qpsk(rng) + &loop_back * s_prev + noise;
        s_prev = (&w_h * r)[(0, 0)];
    }
    Ok(acc / count as f64)
}

/// Simulates the received signal at `user` term by term, applies the
/// receive filter and estimates desired and interference-plus-noise power
/// from separately accumulated components.
pub fn simulate_sinr<R: Rng + ?Sized>(
    user: User,
    bf: &BeamformerSet,
    ch: &ChannelSet,
    sigma2: f64,
    sim: SimConfig,
    rng: &mut R,
) -> Result<f64> {
    sim.validate()?;
    let g = check_sim_loop(bf, ch)?;
    let i = user.index();
    let n_r = ch.h_rr.nrows();
    let n_u = ch.downlink(user).nrows();
    let uplink = [
        inner(&bf.w, &(&ch.h_1r * &bf.f[0])),
        inner(&bf.w, &(&ch.h_2r * &bf.f[1])),
    ];
    let u = bf.u(user);
    let to_user = ch.downlink(user) * &bf.v;
    let c = inner(u, &to_user);
    let si = inner(u, &(ch.self_interference(user) * bf.f(user)));

    // s_sig / s_noise: signal- and noise-driven parts of s[n] = w^H r[n]
    let mut s_sig = [C64::from(0.0); 2];
    let mut s_noise_prev = C64::from(0.0);
    let mut x_prev = [C64::from(0.0); 2];
    let mut acc = [0.0f64; 5];
    let mut count = 0usize;
    for n in 0..sim.n_steps {
        let x = [qpsk(rng), qpsk(rng)];
        let relay_noise = cn_vector(rng, n_r, sigma2);
        let user_noise = cn_vector(rng, n_u, sigma2);
        // s_sig[0] = s_sig[n-1], s_sig[1] = s_sig[n-2]
        let desired = c * uplink[1 - i] * x_prev[1 - i];
        let looped = c * g * s_sig[1];
        let fwd_noise = c * s_noise_prev;
        let self_int = si * x[i];
        let rx_noise = inner(u, &user_noise);
        if n >= sim.burn_in {
            acc[0] += desired.norm_sqr();
            acc[1] += looped.norm_sqr();
            acc[2] += fwd_noise.norm_sqr();
            acc[3] += self_int.norm_sqr();
            acc[4] += rx_noise.norm_sqr();
            count += 1;
        }
        let s_now = uplink[0] * x[0] + uplink[1] * x[1] + g * s_sig[0];
        s_sig = [s_now, s_sig[0]];
        // noise part of s[n]; used as s_noise[n-1] at the next step
        s_noise_prev = inner(&bf.w, &relay_noise) + g * s_noise_prev;
        x_prev = x;
    }
    let k = count as f64;
    let desired = acc[0] / k;
    let interference: f64 = acc[1..].iter().sum::<f64>() / k;
    Ok(desired / interference)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> Result<f64> {
    if !(watts > 0.0) {
        return Err(Error::Domain(format!("cannot express {watts} W in dBm")));
    }
    Ok(10.0 * watts.log10() + 30.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("cannot express {x} in dB")));
    }
    Ok(10.0 * x.log10())
}
