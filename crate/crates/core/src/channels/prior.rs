use super::Prior;
use crate::special::{floor_var, log_add_exp};

/// `log ∫ N(x; μ, v) exp(B x − A x²/2) dx`.
pub(crate) fn gaussian_log_partition(mean: f64, var: f64, a: f64, b: f64) -> f64 {
    let denom = 1.0 + a * var;
    -0.5 * denom.ln() + (2.0 * b * mean + b * b * var - a * mean * mean) / (2.0 * denom)
}

pub(super) fn log_partition(prior: &Prior, a: f64, b: f64) -> f64 {
    match *prior {
        Prior::Gaussian { mean, var } => gaussian_log_partition(mean, var, a, b),
        Prior::GaussBernoulli { rho } => {
            log_add_exp((1.0 - rho).ln(), rho.ln() + gaussian_log_partition(0.0, 1.0, a, b))
        }
    }
}

pub(super) fn denoise(prior: &Prior, a: f64, b: f64) -> (f64, f64) {
    match *prior {
        Prior::Gaussian { mean, var } => {
            let precision = a + 1.0 / var;
            let post_var = 1.0 / precision;
            ((b + mean / var) * post_var, floor_var(post_var))
        }
        Prior::GaussBernoulli { rho } => {
            if rho <= 0.0 {
                return (0.0, 0.0);
            }
            let slab_var = 1.0 / (1.0 + a);
            let slab_mean = b * slab_var;
            // Posterior probability of the slab, from log weights.
            let log_slab = rho.ln() + gaussian_log_partition(0.0, 1.0, a, b);
            let log_spike = (1.0 - rho).ln();
            let pi = (log_slab - log_add_exp(log_slab, log_spike)).exp();
            let h_hat = pi * slab_mean;
            let sigma = pi * slab_var + pi * (1.0 - pi) * slab_mean * slab_mean;
            (h_hat, sigma.max(0.0))
        }
    }
}
