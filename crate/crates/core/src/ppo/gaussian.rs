//! Diagonal Gaussian policy head with a state-independent log-std.

use rand::Rng;
use rand_distr::StandardNormal;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

pub fn clamp_log_std(log_std: f64) -> f64 {
    log_std.clamp(LOG_STD_MIN, LOG_STD_MAX)
}

pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let ls = clamp_log_std(*ls);
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LN_TWO_PI
        })
        .sum()
}

/// Draws `mean + σ·z` and returns it with its log-density.
pub fn gaussian_sample_logprob<R: Rng + ?Sized>(
    mean: &[f64],
    log_std: &[f64],
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let action: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(m, ls)| {
            let z: f64 = rng.sample(StandardNormal);
            m + clamp_log_std(*ls).exp() * z
        })
        .collect();
    let lp = gaussian_log_prob(mean, log_std, &action);
    (action, lp)
}

/// Differential entropy `Σ (log σ + ½ ln 2πe)`.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|ls| clamp_log_std(*ls) + HALF_LN_TWO_PI + 0.5)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_matches_half_ln_two_pi() {
        assert!((HALF_LN_TWO_PI - 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn peak_density() {
        let lp = gaussian_log_prob(&[0.3, -1.0, 2.0], &[0.0; 3], &[0.3, -1.0, 2.0]);
        assert!((lp + 1.5 * (2.0 * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn tiny_std_samples_near_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mean = [4.0, -0.5];
        let (a, _) = gaussian_sample_logprob(&mean, &[-50.0, -50.0], &mut rng);
        for (x, m) in a.iter().zip(mean) {
            assert!((x - m).abs() <= 1e-2 * m.abs() + 1e-2);
        }
    }

    #[test]
    fn entropy_of_unit_gaussian() {
        let h = gaussian_entropy(&[0.0]);
        assert!((h - 0.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-15);
    }
}
