mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{desk_geometry, env_config, scalar_asr, scalar_env};
use simsec::env::{decode_action, Environment, SecrecyEnv};
use simsec::geometry::TWO_PI;

fn desk_env(min_rate: f64) -> SecrecyEnv {
    SecrecyEnv::new(env_config(desk_geometry(), min_rate)).unwrap()
}

#[test]
fn dimensions_follow_geometry() {
    let env = desk_env(0.0);
    assert_eq!(env.observation_dim(), 2 * 9 * 3);
    assert_eq!(env.action_dim(), 2 + 18);
}

#[test]
fn scalar_instance_is_phase_invariant_and_matches_closed_form() {
    for (seed, r_min) in [(1, 0.0), (2, 0.0), (3, 0.01), (4, 1e3)] {
        let mut env = scalar_env(r_min);
        env.reset(seed);
        let (asr, rate) = scalar_asr(&env);
        let expected = if rate >= r_min { asr } else { 0.0 };
        let rewards: Vec<f64> = (0..64)
            .map(|i| {
                let theta = TWO_PI * i as f64 / 64.0;
                // Invert θ = (tanh x + 1)π; the endpoints map to ±∞ and are nudged inward.
                let t = (theta / std::f64::consts::PI - 1.0).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                env.set_channels(env.state().unwrap().raw_channels.clone());
                env.step(&[0.0, t.atanh()]).unwrap().reward
            })
            .collect();
        let lo = rewards.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-10, "spread {}", hi - lo);
        assert!((rewards[0] - expected).abs() <= 1e-10 * expected.max(1.0));
    }
}

#[test]
fn unreachable_rate_floor_zeroes_every_reward() {
    let mut env = desk_env(1e3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    env.reset(5);
    for _ in 0..20 {
        let a = env.random_action(&mut rng);
        let s = env.step(&a).unwrap();
        assert_eq!(s.reward, 0.0);
        assert!(!s.metrics.unwrap().qos_ok);
    }
}

#[test]
fn repeated_action_repeats_reward_within_episode() {
    let mut env = desk_env(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    env.reset(9);
    let a = env.random_action(&mut rng);
    let first = env.step(&a).unwrap();
    let second = env.step(&a).unwrap();
    assert_eq!(first.reward, second.reward);
    assert_eq!(first.observation, second.observation);
}

#[test]
fn horizon_ends_episode() {
    let mut env = desk_env(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    env.reset(0);
    for t in 1..=20 {
        let a = env.random_action(&mut rng);
        assert_eq!(env.step(&a).unwrap().done, t == 20);
    }
    assert!(env.step(&[0.0; 20]).is_err());
}

#[test]
fn trajectories_are_reproducible() {
    let run = || {
        let mut env = desk_env(0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut out = vec![env.reset(123)];
        for _ in 0..20 {
            let a = env.random_action(&mut rng);
            let s = env.step(&a).unwrap();
            out.push(vec![s.reward, s.metrics.unwrap().asr, s.metrics.unwrap().jain]);
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn random_power_split_is_flat_dirichlet() {
    let env = desk_env(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p0 = env.config().p0;
    let n = 20_000;
    let mut first = Vec::with_capacity(n);
    for _ in 0..n {
        let (p, _) = env.decode_action(&env.random_action(&mut rng)).unwrap();
        first.push(p.0[0] / p0);
    }
    // Dirichlet(1, 1) marginal is uniform on [0, 1]: mean 1/2, variance 1/12.
    let mean = first.iter().sum::<f64>() / n as f64;
    let var = first.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0 / n as f64).sqrt());
    assert!((var - 1.0 / 12.0).abs() < 0.005);
}

proptest! {
    #[test]
    fn decoded_actions_are_always_feasible(
        raw in prop::collection::vec(prop_oneof![-1e6..1e6f64, -30.0..30.0f64], 20),
    ) {
        let (p, phases) = decode_action(&raw, 2, 2, 9, 0.01).unwrap();
        prop_assert!((p.total() - 0.01).abs() <= 1e-15);
        prop_assert!(p.0.iter().all(|&v| v > 0.0));
        prop_assert!(phases.as_slice().iter().all(|&t| (0.0..TWO_PI).contains(&t)));
    }

    #[test]
    fn reward_is_gated_asr(seed in 0u64..500, r_min in 0.0..0.05f64) {
        let mut env = desk_env(r_min);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        env.reset(seed);
        let a = env.random_action(&mut rng);
        let out = env.step_outcome(&a).unwrap();
        let gated = if out.info.qos_ok { out.info.asr } else { 0.0 };
        prop_assert_eq!(out.reward, gated);
        prop_assert!(out.reward >= 0.0);
        prop_assert_eq!(out.info.qos_ok, out.info.user_rate.iter().all(|&r| r >= r_min));
    }
}

#[test]
fn decode_rejects_bad_input() {
    assert!(decode_action(&[0.0; 3], 2, 2, 9, 0.01).is_err());
    let mut raw = vec![0.0; 20];
    raw[4] = f64::NAN;
    assert!(decode_action(&raw, 2, 2, 9, 0.01).is_err());
}
