use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A `k`-tap convolution filter. The circulant block it generates has the
/// zero-padded taps as its first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvFilter {
    taps: Vec<f64>,
}

impl ConvFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return invalid("filter must have at least one tap");
        }
        Ok(Self { taps })
    }

    pub fn k(&self) -> usize {
        self.taps.len()
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn into_taps(self) -> Vec<f64> {
        self.taps
    }
}

/// Variance profile `1/k` on every tap: the i.i.d. convolution ensemble.
pub fn default_profile(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

pub(crate) fn validate_profile(k: usize, profile: &[f64]) -> Result<()> {
    if k == 0 {
        return invalid("filter length k must be positive");
    }
    if profile.len() != k {
        return invalid(format!("variance profile has length {} but k = {k}", profile.len()));
    }
    if let Some(v) = profile.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return invalid(format!("variance profile entries must be positive and finite, got {v}"));
    }
    Ok(())
}

/// Samples independent zero-mean Gaussian taps, tap `i` with variance
/// `variance_profile[i]` (default `1/k` each).
pub fn sample_conv_filter<R: Rng + ?Sized>(
    k: usize,
    variance_profile: Option<&[f64]>,
    rng: &mut R,
) -> Result<ConvFilter> {
    let default;
    let profile = match variance_profile {
        Some(p) => p,
        None => {
            default = default_profile(k);
            &default
        }
    };
    validate_profile(k, profile)?;
    let taps = profile
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            z * v.sqrt()
        })
        .collect();
    Ok(ConvFilter { taps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empirical_second_moments(k: usize, profile: Option<&[f64]>, draws: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut acc = vec![0.0; k];
        for _ in 0..draws {
            let f = sample_conv_filter(k, profile, &mut rng).unwrap();
            for (a, t) in acc.iter_mut().zip(f.taps()) {
                *a += t * t;
            }
        }
        acc.iter().map(|a| a / draws as f64).collect()
    }

    #[test]
    fn default_profile_gives_one_over_k() {
        for m in empirical_second_moments(3, None, 100_000) {
            assert!((m - 1.0 / 3.0).abs() / (1.0 / 3.0) < 0.02, "{m}");
        }
    }

    #[test]
    fn structured_profile_moments() {
        let m = empirical_second_moments(2, Some(&[1.0, 0.25]), 100_000);
        assert!((m[0] - 1.0).abs() < 0.02);
        assert!((m[1] - 0.25).abs() / 0.25 < 0.02);
    }

    #[test]
    fn vanishing_variance_gives_zero_tap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = sample_conv_filter(1, Some(&[1e-12]), &mut rng).unwrap();
        assert!(f.taps()[0].abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_conv_filter(0, None, &mut rng).is_err());
        assert!(sample_conv_filter(2, Some(&[1.0, 0.0]), &mut rng).is_err());
        assert!(sample_conv_filter(2, Some(&[1.0, -1.0]), &mut rng).is_err());
        assert!(sample_conv_filter(2, Some(&[1.0]), &mut rng).is_err());
    }
}
