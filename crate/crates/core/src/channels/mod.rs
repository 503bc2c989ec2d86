//! Scalar channel laws `P(h | z)`, signal priors `P_X`, and their
//! Bayes-optimal denoisers, all obtained as log-derivatives of the
//! corresponding partition functions.

mod middle;
pub mod oracle;
mod output;
mod prior;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use oracle::{quadrature_log_partition, PartitionArgs};

/// A layer's conditional law `h = φ(z, ζ)` with `ζ ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Channel {
    /// `h = z + √σ² ζ`.
    Awgn { sigma2: f64 },
    /// `h = max(z, 0)`.
    Relu,
    /// `h = z`.
    Identity,
}

/// Separable prior on the signal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior {
    /// `ρ N(0, 1) + (1 − ρ) δ(x)`.
    GaussBernoulli { rho: f64 },
    Gaussian { mean: f64, var: f64 },
}

/// The four denoiser outputs at a hidden layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiserOutput {
    /// Posterior mean of `h`, `∂_B log Z`.
    pub h_hat: f64,
    /// `∂_B h_hat`, the posterior variance of `h`.
    pub sigma: f64,
    /// `∂_ω log Z`.
    pub g: f64,
    /// `∂_ω g`.
    pub eta: f64,
}

impl Channel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Channel::Awgn { sigma2 } if !(sigma2 >= 0.0) || !sigma2.is_finite() => {
                invalid(format!("awgn variance must be non-negative, got {sigma2}"))
            }
            _ => Ok(()),
        }
    }

    /// Noise variance of a linear-Gaussian channel (identity counts as 0).
    pub(crate) fn gaussian_noise(&self) -> Option<f64> {
        match *self {
            Channel::Awgn { sigma2 } => Some(sigma2),
            Channel::Identity => Some(0.0),
            Channel::Relu => None,
        }
    }

    /// `φ(z, ζ)` for one coordinate.
    pub fn forward(&self, z: f64, zeta: f64) -> f64 {
        match *self {
            Channel::Awgn { sigma2 } => z + sigma2.sqrt() * zeta,
            Channel::Relu => z.max(0.0),
            Channel::Identity => z,
        }
    }

    /// Second moment of `φ(z, ζ)` for `z ~ N(0, tau_z)`.
    pub fn output_second_moment(&self, tau_z: f64) -> f64 {
        match *self {
            Channel::Awgn { sigma2 } => tau_z + sigma2,
            Channel::Relu => 0.5 * tau_z,
            Channel::Identity => tau_z,
        }
    }

    /// Output-layer denoiser `(g, eta)` without argument validation.
    pub fn output_denoise_raw(&self, y: f64, v: f64, omega: f64) -> (f64, f64) {
        output::denoise(self, y, v, omega)
    }

    /// Hidden-layer denoiser without argument validation.
    pub fn middle_denoise_raw(&self, a: f64, b: f64, v: f64, omega: f64) -> DenoiserOutput {
        middle::denoise(self, a, b, v, omega)
    }

    /// Closed-form `log Z^(1)(y, V, ω)`.
    pub fn output_log_partition(&self, y: f64, v: f64, omega: f64) -> f64 {
        output::log_partition(self, y, v, omega)
    }

    /// Closed-form `log Z^(l)(A, B, V, ω)`.
    pub fn middle_log_partition(&self, a: f64, b: f64, v: f64, omega: f64) -> f64 {
        middle::log_partition(self, a, b, v, omega)
    }
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Prior::GaussBernoulli { rho } if !(0.0..=1.0).contains(&rho) => {
                invalid(format!("rho must lie in [0, 1], got {rho}"))
            }
            Prior::Gaussian { mean, var } if !(var > 0.0) || !var.is_finite() || !mean.is_finite() => {
                invalid(format!("gaussian prior needs finite mean and positive variance, got ({mean}, {var})"))
            }
            _ => Ok(()),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            Prior::GaussBernoulli { rho } => rho,
            Prior::Gaussian { mean, var } => mean * mean + var,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Prior::GaussBernoulli { .. } => 0.0,
            Prior::Gaussian { mean, .. } => mean,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| match *self {
                Prior::GaussBernoulli { rho } => {
                    let on = rng.random::<f64>() < rho;
                    let z: f64 = StandardNormal.sample(rng);
                    if on {
                        z
                    } else {
                        0.0
                    }
                }
                Prior::Gaussian { mean, var } => {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + var.sqrt() * z
                }
            })
            .collect()
    }

    /// `(h_hat, sigma)` without argument validation.
    pub fn denoise_raw(&self, a: f64, b: f64) -> (f64, f64) {
        prior::denoise(self, a, b)
    }

    /// Closed-form `log Z^(L)(A, B)`.
    pub fn log_partition(&self, a: f64, b: f64) -> f64 {
        prior::log_partition(self, a, b)
    }
}

/// Posterior mean and variance of the signal under the prior tilted by
/// `exp(B x − A x²/2)`.
pub fn prior_denoise(prior: &Prior, a: f64, b: f64) -> Result<(f64, f64)> {
    prior.validate()?;
    if !(a >= 0.0) || !b.is_finite() {
        return invalid(format!("prior denoiser needs A >= 0 and finite B, got A={a} B={b}"));
    }
    Ok(prior.denoise_raw(a, b))
}

/// `(g, eta)` at the output layer for observation `y`.
pub fn output_denoise(ch: &Channel, y: f64, v: f64, omega: f64) -> Result<(f64, f64)> {
    ch.validate()?;
    if !(v > 0.0) || !omega.is_finite() || !y.is_finite() {
        return invalid(format!("output denoiser needs V > 0 and finite y, ω; got V={v}"));
    }
    if matches!(ch, Channel::Relu) && y < 0.0 {
        return invalid(format!("relu channel cannot emit y = {y} < 0"));
    }
    Ok(ch.output_denoise_raw(y, v, omega))
}

/// All four hidden-layer denoiser outputs.
pub fn middle_denoise(ch: &Channel, a: f64, b: f64, v: f64, omega: f64) -> Result<DenoiserOutput> {
    ch.validate()?;
    if !(a >= 0.0) || !(v > 0.0) || !b.is_finite() || !omega.is_finite() {
        return invalid(format!("hidden denoiser needs A >= 0, V > 0; got A={a} V={v}"));
    }
    Ok(ch.middle_denoise_raw(a, b, v, omega))
}

/// Draws `h_i = φ(z_i, ζ_i)` with fresh noise, returning `(h, ζ)`.
pub fn sample_channel_with_noise<R: Rng + ?Sized>(ch: &Channel, z: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let noise: Vec<f64> = match ch {
        Channel::Awgn { .. } => (0..z.len()).map(|_| StandardNormal.sample(rng)).collect(),
        Channel::Relu | Channel::Identity => vec![0.0; z.len()],
    };
    (apply_channel(ch, z, &noise), noise)
}

/// Draws `h_i = φ(z_i, ζ_i)` with fresh noise.
pub fn sample_channel<R: Rng + ?Sized>(ch: &Channel, z: &[f64], rng: &mut R) -> Vec<f64> {
    sample_channel_with_noise(ch, z, rng).0
}

/// Applies the channel with recorded noise.
pub fn apply_channel(ch: &Channel, z: &[f64], noise: &[f64]) -> Vec<f64> {
    z.iter().zip(noise).map(|(&zi, &n)| ch.forward(zi, n)).collect()
}

#[cfg(test)]
mod tests;
