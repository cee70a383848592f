//! Initialization, the zero-forcing benchmark and the reference schemes.
//!
//! The zero-forcing (ZF) scheme confines every beamformer to the null space
//! of the corresponding self-interference channel, so the loop gain and the
//! user-side echoes vanish and every update has a closed form: a null-space
//! direction followed by the smallest scaling that meets both SINR targets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ao_driver::{alternate, AoConfig, SolveReport, Stage};
use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sq, ones_normalized, orthogonal_complement, principal_direction, project_out, CVec, C64};
use crate::model::{BeamformerSet, ChannelSet, LinkBudget, User};

/// Squared gains below this are treated as exact zeros.
const GAIN_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Joint AO on the full-duplex channels.
    #[serde(rename = "ProposedFD")]
    ProposedFd,
    /// AO with every beamformer restricted to the self-interference null spaces.
    #[serde(rename = "ZfFD")]
    ZfFd,
    /// The initialization point on the full-duplex channels, no optimization.
    FdBaseline,
    /// Joint AO with all self-interference channels removed.
    #[serde(rename = "IdealFD")]
    IdealFd,
    /// Joint AO without self-interference at the half-duplex rate target.
    #[serde(rename = "HalfDuplexAO")]
    HalfDuplexAo,
    /// The initialization point at the half-duplex rate target.
    HalfDuplexBaseline,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::ProposedFd,
        SchemeKind::ZfFd,
        SchemeKind::FdBaseline,
        SchemeKind::IdealFd,
        SchemeKind::HalfDuplexAo,
        SchemeKind::HalfDuplexBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::ProposedFd => "ProposedFD",
            SchemeKind::ZfFd => "ZfFD",
            SchemeKind::FdBaseline => "FdBaseline",
            SchemeKind::IdealFd => "IdealFD",
            SchemeKind::HalfDuplexAo => "HalfDuplexAO",
            SchemeKind::HalfDuplexBaseline => "HalfDuplexBaseline",
        }
    }

    pub fn is_half_duplex(self) -> bool {
        matches!(self, SchemeKind::HalfDuplexAo | SchemeKind::HalfDuplexBaseline)
    }

    /// Whether the scheme runs on the channels with self-interference removed.
    pub fn uses_ideal_channels(self) -> bool {
        matches!(self, SchemeKind::IdealFd | SchemeKind::HalfDuplexAo | SchemeKind::HalfDuplexBaseline)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

/// Unit vector in the complement of `a` best aligned with `b`, with `|b^H d|`.
fn null_principal(a: &CVec, b: &CVec, what: &str) -> Result<(CVec, f64)> {
    let z = orthogonal_complement(a).ok_or_else(|| Error::RankDeficient(format!("{what}: null space is empty")))?;
    let (c, gain) = principal_direction(&z, b)
        .ok_or_else(|| Error::RankDeficient(format!("{what}: no gain left in the null space")))?;
    if gain * gain < GAIN_FLOOR {
        return Err(Error::RankDeficient(format!("{what}: null-space gain {gain:.3e} too small")));
    }
    Ok((z * c, gain))
}

/// Smallest `||v||^2` along unit direction `d` meeting both targets when the
/// loop and user echoes are nulled.
pub fn min_scale_v(ch: &ChannelSet, bf: &BeamformerSet, budget: &LinkBudget, d: &CVec) -> Result<f64> {
    let w2 = norm_sq(&bf.w);
    let mut alpha: f64 = 0.0;
    for user in User::BOTH {
        let i = user.index();
        let theta = budget.theta[i];
        let fwd = inner(&bf.w, &(ch.uplink(user.other()) * bf.f(user.other()))).norm_sqr();
        let excess = fwd - theta * budget.sigma2 * w2;
        if !(excess > 0.0) {
            return Err(Error::InfeasibleDirection(format!(
                "forwarded signal of user {} too weak for target of user {}",
                user.other().index() + 1,
                i + 1
            )));
        }
        let down = inner(bf.u(user), &(ch.downlink(user) * d)).norm_sqr();
        if down < GAIN_FLOOR {
            return Err(Error::InfeasibleDirection(format!("relay direction misses user {}", i + 1)));
        }
        alpha = alpha.max(theta * budget.sigma2 / down / excess);
    }
    Ok(alpha)
}

/// Smallest `||w||^2` along unit direction `d` meeting both targets when the
/// loop and user echoes are nulled.
pub fn min_scale_w(ch: &ChannelSet, bf: &BeamformerSet, budget: &LinkBudget, d: &CVec) -> Result<f64> {
    let mut alpha: f64 = 0.0;
    for user in User::BOTH {
        let i = user.index();
        let theta = budget.theta[i];
        let q = inner(bf.u(user), &(ch.downlink(user) * &bf.v)).norm_sqr();
        let a = q * inner(d, &(ch.uplink(user.other()) * bf.f(user.other()))).norm_sqr();
        let b = theta * budget.sigma2 * q * norm_sq(d);
        if !(a > b) {
            return Err(Error::InfeasibleDirection(format!("receive direction too weak for user {}", i + 1)));
        }
        alpha = alpha.max(theta * budget.sigma2 / (a - b));
    }
    Ok(alpha)
}

/// Feasible starting point with every self-interference path nulled and the
/// forwarded signals 3 dB above the level the relay noise alone requires.
pub fn init_beamformers(ch: &ChannelSet, budget: &LinkBudget) -> Result<BeamformerSet> {
    let dims = ch.dims();
    let w = ones_normalized(dims.n_r);
    let u = [ones_normalized(dims.n_1), ones_normalized(dims.n_2)];
    let w2 = norm_sq(&w);
    let mut f = [CVec::zeros(dims.m_1), CVec::zeros(dims.m_2)];
    for user in User::BOTH {
        let i = user.index();
        let a = ch.self_interference(user).adjoint() * &u[i];
        let b = ch.uplink(user).adjoint() * &w;
        let (d, gain) = null_principal(&a, &b, &format!("initial transmit beamformer of user {}", i + 1))?;
        let target = 2.0 * budget.theta[user.other().index()] * budget.sigma2 * w2;
        f[i] = d * C64::from(target.sqrt() / gain);
    }
    let mut bf = BeamformerSet { v: CVec::zeros(dims.m_r), w, f, u };
    let a = ch.h_rr.adjoint() * &bf.w;
    let b = ch.h_r1.adjoint() * &bf.u[0] + ch.h_r2.adjoint() * &bf.u[1];
    let (d, _) = null_principal(&a, &b, "initial relay transmit beamformer")?;
    let alpha = min_scale_v(ch, &bf, budget, &d).map_err(|e| match e {
        Error::InfeasibleDirection(m) => Error::RankDeficient(format!("initial relay transmit beamformer: {m}")),
        other => other,
    })?;
    bf.v = d * C64::from(alpha.sqrt());
    Ok(bf)
}

/// Optimal ZF user transmit beamformers for fixed `v`, `w`, `u`: each `f_i`
/// is scaled to meet the other user's target exactly.
pub fn zf_f_step(ch: &ChannelSet, bf: &BeamformerSet, budget: &LinkBudget) -> Result<[CVec; 2]> {
    let w2 = norm_sq(&bf.w);
    let mut out = bf.f.clone();
    for user in User::BOTH {
        let i = user.index();
        let peer = user.other();
        let a = ch.self_interference(user).adjoint() * bf.u(user);
        let b = ch.uplink(user).adjoint() * &bf.w;
        let (d, gain) = null_principal(&a, &b, &format!("ZF transmit beamformer of user {}", i + 1))?;
        let c = inner(bf.u(peer), &(ch.downlink(peer) * &bf.v)).norm_sqr();
        if c < GAIN_FLOOR {
            return Err(Error::InfeasibleDirection(format!("relay does not reach user {}", peer.index() + 1)));
        }
        let theta = budget.theta[peer.index()];
        let alpha = theta * budget.sigma2 * (c * w2 + 1.0) / (c * gain * gain);
        out[i] = d * C64::from(alpha.sqrt());
    }
    Ok(out)
}

/// ZF receive filters: the relay signal projected off the user's own echo.
pub fn zf_u_step(ch: &ChannelSet, bf: &BeamformerSet) -> Result<[CVec; 2]> {
    let mut out = bf.u.clone();
    for user in User::BOTH {
        let i = user.index();
        let x = project_out(&(ch.downlink(user) * &bf.v), &(ch.self_interference(user) * bf.f(user)));
        let n = x.norm();
        if n < 1e-14 * (ch.downlink(user) * &bf.v).norm().max(1e-300) || n == 0.0 {
            return Err(Error::DegenerateDirection(format!("ZF receiver of user {} vanished", i + 1)));
        }
        out[i] = x / C64::from(n);
    }
    Ok(out)
}

/// ZF relay transmit beamformer. The null-space principal direction is the
/// candidate; the incumbent direction is kept when its minimal scaling is
/// cheaper, so the step never raises power.
pub fn zf_v_step(ch: &ChannelSet, bf: &BeamformerSet, budget: &LinkBudget) -> Result<CVec> {
    let a = ch.h_rr.adjoint() * &bf.w;
    let b = ch.h_r1.adjoint() * &bf.u[0] + ch.h_r2.adjoint() * &bf.u[1];
    let (d, _) = null_principal(&a, &b, "ZF relay transmit beamformer")
        .map_err(|e| Error::InfeasibleDirection(e.to_string()))?;
    let mut best = (min_scale_v(ch, bf, budget, &d)?, d);
    let vn = bf.v.norm();
    if vn > 0.0 {
        let cur = &bf.v / C64::from(vn);
        if inner(&a, &cur).norm() <= 1e-10 * a.norm().max(1e-300) {
            if let Ok(alpha) = min_scale_v(ch, bf, budget, &cur) {
                if alpha < best.0 {
                    best = (alpha, cur);
                }
            }
        }
    }
    Ok(best.1 * C64::from(best.0.sqrt()))
}

/// ZF relay receive beamformer, with the same incumbent guard as [`zf_v_step`].
pub fn zf_w_step(ch: &ChannelSet, bf: &BeamformerSet, budget: &LinkBudget) -> Result<CVec> {
    let loop_dir = &ch.h_rr * &bf.v;
    let x = project_out(&(&ch.h_1r * &bf.f[0] + &ch.h_2r * &bf.f[1]), &loop_dir);
    let n = x.norm();
    if n < 1e-300 {
        return Err(Error::InfeasibleDirection("combined uplink lies along the loop direction".into()));
    }
    let d = x / C64::from(n);
    let cost = |d: &CVec| {
        (User::BOTH.iter().map(|&u| inner(d, &(ch.uplink(u) * bf.f(u))).norm_sqr()).sum::<f64>()) + budget.sigma2
    };
    let alpha = min_scale_w(ch, bf, budget, &d)?;
    let mut best = (alpha * cost(&d), alpha, d);
    let wn = bf.w.norm();
    if wn > 0.0 {
        let cur = &bf.w / C64::from(wn);
        if inner(&cur, &loop_dir).norm() <= 1e-10 * loop_dir.norm().max(1e-300) {
            if let Ok(alpha) = min_scale_w(ch, bf, budget, &cur) {
                if alpha * cost(&cur) < best.0 {
                    best = (alpha * cost(&cur), alpha, cur);
                }
            }
        }
    }
    Ok(best.2 * C64::from(best.1.sqrt()))
}

/// Alternating ZF updates in the order v, w, f, u from the initialization point.
pub fn zf_ao(ch: &ChannelSet, budget: &LinkBudget, cfg: &AoConfig) -> Result<SolveReport> {
    let init = init_beamformers(ch, budget)?;
    alternate(SchemeKind::ZfFd, ch, budget, cfg, init, |stage, bf| {
        match stage {
            Stage::V => bf.v = zf_v_step(ch, bf, budget)?,
            Stage::W => bf.w = zf_w_step(ch, bf, budget)?,
            Stage::F => bf.f = zf_f_step(ch, bf, budget)?,
            Stage::U => bf.u = zf_u_step(ch, bf)?,
        }
        Ok(None)
    })
}

/// Copy of `ch` with every self-interference channel removed.
pub fn make_ideal(ch: &ChannelSet) -> ChannelSet {
    let mut out = ch.clone();
    out.h_rr.fill(C64::from(0.0));
    out.h_11.fill(C64::from(0.0));
    out.h_22.fill(C64::from(0.0));
    out
}

/// SINR a half-duplex link needs to match the full-duplex rate with half the
/// time: `(1 + theta)^2 - 1`.
pub fn hd_target(theta: f64) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::Domain(format!("SINR target must be nonnegative, got {theta}")));
    }
    Ok((1.0 + theta) * (1.0 + theta) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, generate_channels, sinr, SystemDims};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draw(seed: u64) -> (ChannelSet, LinkBudget) {
        let budget = LinkBudget::reference(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (generate_channels(&mut rng, &SystemDims::reference(), &budget), budget)
    }

    #[test]
    fn scheme_names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("nope".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn hd_target_values() {
        assert!((hd_target(10.0).unwrap() - 120.0).abs() < 1e-12);
        assert!((hd_target(1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(hd_target(1e-9).unwrap() < 3e-9);
        assert!(hd_target(-1.0).is_err());
    }

    #[test]
    fn init_nulls_echoes_and_doubles_threshold() {
        let (ch, budget) = draw(1);
        let bf = init_beamformers(&ch, &budget).unwrap();
        for user in User::BOTH {
            let echo = inner(bf.u(user), &(ch.self_interference(user) * bf.f(user))).norm();
            assert!(echo < 1e-10 * bf.f(user).norm());
            let fwd = inner(&bf.w, &(ch.uplink(user) * bf.f(user))).norm_sqr();
            let need = 2.0 * budget.theta[user.other().index()] * budget.sigma2 * norm_sq(&bf.w);
            assert!((fwd - need).abs() < 1e-10 * need);
        }
        assert!(inner(&bf.w, &(&ch.h_rr * &bf.v)).norm() < 1e-10 * bf.v.norm());
        assert!(check_feasible(&bf, &ch, budget.sigma2, budget.theta, 1e-9).feasible);
    }

    #[test]
    fn zf_f_makes_peer_target_tight() {
        let (ch, budget) = draw(2);
        let mut bf = init_beamformers(&ch, &budget).unwrap();
        bf.f = zf_f_step(&ch, &bf, &budget).unwrap();
        for user in User::BOTH {
            let s = sinr(user, &bf, &ch, budget.sigma2).unwrap();
            assert!((s / budget.theta[user.index()] - 1.0).abs() < 1e-8, "{s}");
        }
    }

    #[test]
    fn zf_v_and_w_meet_targets_with_one_tight() {
        let (ch, budget) = draw(3);
        let mut bf = init_beamformers(&ch, &budget).unwrap();
        bf.v = zf_v_step(&ch, &bf, &budget).unwrap();
        bf.w = zf_w_step(&ch, &bf, &budget).unwrap();
        assert!(inner(&bf.w, &(&ch.h_rr * &bf.v)).norm() < 1e-10 * bf.v.norm() * bf.w.norm());
        let ratios: Vec<f64> = User::BOTH
            .iter()
            .map(|&u| sinr(u, &bf, &ch, budget.sigma2).unwrap() / budget.theta[u.index()])
            .collect();
        assert!(ratios.iter().all(|&r| r >= 1.0 - 1e-8), "{ratios:?}");
        assert!(ratios.iter().any(|&r| (r - 1.0).abs() < 1e-8), "{ratios:?}");
    }

    #[test]
    fn ideal_channels_have_no_loop() {
        let (ch, budget) = draw(4);
        let ideal = make_ideal(&ch);
        let bf = init_beamformers(&ideal, &budget).unwrap();
        assert_eq!(crate::model::loop_gain(&bf.w, &bf.v, &ideal.h_rr), 0.0);
    }
}
