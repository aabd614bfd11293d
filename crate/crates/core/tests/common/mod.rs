#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simsec::geometry::SimGeometry;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn desk_geometry() -> SimGeometry {
    SimGeometry::standard(2, 9, 2, 2).unwrap()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// `|a − b| ≤ tol · max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Central difference of `f` along every coordinate of `x`.
pub fn finite_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest `|a − b| / max(|a|, |b|, floor)` over paired entries.
pub fn worst_rel(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn env_config(geometry: SimGeometry, min_rate: f64) -> simsec::env::EnvConfig {
    simsec::env::EnvConfig {
        geometry,
        channel: simsec::channel::ChannelParams::default(),
        horizon: 20,
        p0: simsec::channel::dbm_to_watts(10.0),
        min_rate,
        min_distance: 75.0,
        max_distance: 100.0,
        bs_height: 10.0,
    }
}

/// Single atom, single layer, single antenna, single user.
pub fn scalar_env(min_rate: f64) -> simsec::env::SecrecyEnv {
    simsec::env::SecrecyEnv::new(env_config(SimGeometry::standard(1, 1, 1, 1).unwrap(), min_rate))
        .unwrap()
}

/// Closed-form `(asr, user_rate)` of the scalar instance: the feed coefficient
/// spans the full gap, so `|w|² = (A/D)² (1/(2πD)² + 1/λ²)` and the phase
/// cancels inside every magnitude.
pub fn scalar_asr(env: &simsec::env::SecrecyEnv) -> (f64, f64) {
    let cfg = env.config();
    let g = &cfg.geometry;
    let d = g.total_thickness;
    let w2 = (g.atom_area / d).powi(2)
        * ((2.0 * std::f64::consts::PI * d).powi(-2) + g.wavelength.powi(-2));
    let ch = &env.state().unwrap().raw_channels;
    let p = cfg.p0;
    let user = ch.h_users[0][0].norm_sqr() * w2 * p / cfg.channel.noise_power_user;
    let eve = ch.h_eve_est[0].norm_sqr() * w2 * p
        / (ch.h_eve_err[0].norm_sqr() * w2 * p + cfg.channel.noise_power_eve);
    let rate = (1.0 + user).log2();
    ((rate - (1.0 + eve).log2()).max(0.0), rate)
}
