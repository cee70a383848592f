use fdrelay::linalg::{cn_matrix, cn_vector, inner, orthogonal_complement, random_unit, CMat, CVec, C64};
use fdrelay::model::{generate_channels, relay_power, sinr, total_power, BeamformerSet, ChannelSet, LinkBudget, SystemDims, User};
use fdrelay::relay_sca::{minorant_delta, minorant_upsilon};
use fdrelay::user_opt::mmse_u_for;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn psd(r: &mut ChaCha8Rng, n: usize, rank: usize) -> CMat {
    let a = cn_matrix(r, n, rank, 1.0);
    &a * a.adjoint()
}

/// Reference-size channels and a random point with loop gain below one.
fn stable_point(seed: u64, kappa: f64) -> (ChannelSet, BeamformerSet) {
    let mut r = rng(seed);
    let dims = SystemDims::reference();
    let budget = LinkBudget::new(1.0, [1.0, 1.0], 1.0, kappa).unwrap();
    let ch = generate_channels(&mut r, &dims, &budget);
    let w = cn_vector(&mut r, dims.n_r, 1.0);
    let mut v = cn_vector(&mut r, dims.m_r, 1.0);
    let g = inner(&w, &(&ch.h_rr * &v)).norm();
    if g > 0.5 {
        v *= C64::from(0.5 / g);
    }
    let bf = BeamformerSet {
        v,
        w,
        f: [cn_vector(&mut r, dims.m_1, 1.0), cn_vector(&mut r, dims.m_2, 1.0)],
        u: [random_unit(&mut r, dims.n_1), random_unit(&mut r, dims.n_2)],
    };
    (ch, bf)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quadratic_minorant_is_global_lower_bound(seed in any::<u64>(), n in 1usize..6, rank in 1usize..6) {
        let mut r = rng(seed);
        let phi = psd(&mut r, n, rank.min(n));
        let v_ref = cn_vector(&mut r, n, 1.0);
        let v = cn_vector(&mut r, n, 3.0);
        let exact = inner(&v, &(&phi * &v)).re;
        let lower = minorant_upsilon(&phi, &v_ref, &v);
        prop_assert!(lower <= exact + 1e-9 * (1.0 + exact.abs()));
        let at_ref = minorant_upsilon(&phi, &v_ref, &v_ref);
        let exact_ref = inner(&v_ref, &(&phi * &v_ref)).re;
        prop_assert!((at_ref - exact_ref).abs() <= 1e-10 * (1.0 + exact_ref));
    }

    #[test]
    fn reciprocal_minorant_is_lower_bound(rho_ref in 1e-4f64..1e4, rho in 1e-4f64..1e4) {
        let lower = minorant_delta(rho_ref, rho).unwrap();
        prop_assert!(lower <= 1.0 / rho * (1.0 + 1e-12));
    }

    #[test]
    fn reciprocal_minorant_rejects_nonpositive(rho in -10.0f64..=0.0) {
        prop_assert!(minorant_delta(1.0, rho).is_err());
        prop_assert!(minorant_delta(rho, 1.0).is_err());
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let a = cn_vector(&mut r, n, 1.0);
        let q = orthogonal_complement(&a).unwrap();
        prop_assert_eq!(q.ncols(), n - 1);
        let gram = q.adjoint() * &q;
        prop_assert!((gram - CMat::identity(n - 1, n - 1)).norm() < 1e-10);
        prop_assert!((a.adjoint() * &q).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn relay_gain_split_is_invariant(seed in any::<u64>(), alpha in 0.01f64..100.0) {
        // (w, v) -> (w / alpha, alpha v) leaves power and SINR unchanged
        let (ch, bf) = stable_point(seed, 0.3);
        let mut scaled = bf.clone();
        scaled.w = &bf.w / C64::from(alpha);
        scaled.v = &bf.v * C64::from(alpha);
        let sigma2 = 0.2;
        let (p0, p1) = (total_power(&bf, &ch, sigma2).unwrap(), total_power(&scaled, &ch, sigma2).unwrap());
        prop_assert!((p0 - p1).abs() <= 1e-9 * p0);
        for user in User::BOTH {
            let (s0, s1) = (sinr(user, &bf, &ch, sigma2).unwrap(), sinr(user, &scaled, &ch, sigma2).unwrap());
            prop_assert!((s0 - s1).abs() <= 1e-9 * s0);
        }
    }

    #[test]
    fn relay_power_grows_with_loop_channel(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (mut ch, bf) = stable_point(seed, 0.5);
        let base = ch.h_rr.clone();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        ch.h_rr = &base * C64::from(lo);
        let p_lo = relay_power(&bf, &ch, 0.1).unwrap();
        ch.h_rr = &base * C64::from(hi);
        let p_hi = relay_power(&bf, &ch, 0.1).unwrap();
        prop_assert!(p_lo <= p_hi * (1.0 + 1e-12));
    }

    #[test]
    fn mmse_receiver_is_unit_and_beats_random(seed in any::<u64>(), sigma2 in 1e-3f64..10.0) {
        let (ch, bf) = stable_point(seed, 0.3);
        let mut r = rng(seed ^ 0xabc);
        for user in User::BOTH {
            let u = mmse_u_for(user, &bf, &ch, sigma2).unwrap();
            prop_assert!((u.norm() - 1.0).abs() < 1e-12);
            let mut best = bf.clone();
            best.u[user.index()] = u;
            let s_best = sinr(user, &best, &ch, sigma2).unwrap();
            for _ in 0..50 {
                let mut trial = bf.clone();
                trial.u[user.index()] = random_unit(&mut r, ch.downlink(user).nrows());
                prop_assert!(sinr(user, &trial, &ch, sigma2).unwrap() <= s_best * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn channels_are_reproducible(seed in any::<u64>()) {
        let dims = SystemDims::reference();
        let budget = LinkBudget::reference(10.0);
        let a = generate_channels(&mut rng(seed), &dims, &budget);
        let b = generate_channels(&mut rng(seed), &dims, &budget);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn power_vanishes_without_inputs_or_noise() {
    let (ch, mut bf) = stable_point(3, 0.3);
    bf.f = [CVec::zeros(2), CVec::zeros(2)];
    assert_eq!(relay_power(&bf, &ch, 0.0).unwrap(), 0.0);
}
