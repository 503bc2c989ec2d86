use super::{Channel, DenoiserOutput};
use crate::special::{floor_var, inv_mills, log_add_exp, log_norm_cdf};

/// `log ∫ N(z; ω, S) exp(B z − A z²/2) dz`, written without the
/// cancellation-prone `m²Λ − ω²/S` form.
fn tilted_gaussian_log_mass(a: f64, b: f64, s: f64, omega: f64) -> f64 {
    let denom = 1.0 + a * s;
    -0.5 * denom.ln() + (2.0 * b * omega + b * b * s - a * omega * omega) / (2.0 * denom)
}

pub(super) fn log_partition(ch: &Channel, a: f64, b: f64, v: f64, omega: f64) -> f64 {
    let v = floor_var(v);
    match ch.gaussian_noise() {
        Some(noise) => tilted_gaussian_log_mass(a, b, floor_var(v + noise), omega),
        None => {
            let relu = ReluSplit::new(a, b, v, omega);
            log_add_exp(relu.log_neg, relu.log_pos)
        }
    }
}

/// The two regions of the ReLU integral: `z < 0` (h = 0) and `z >= 0` (h = z).
struct ReluSplit {
    log_neg: f64,
    log_pos: f64,
    /// Mean and sd of the tilted Gaussian `∝ N(z; ω, V) e^{Bz − Az²/2}`.
    tilt_mean: f64,
    tilt_sd: f64,
    /// `(tilt_mean − ω)`, computed directly.
    tilt_shift: f64,
    alpha_pos: f64,
    alpha_neg: f64,
}

impl ReluSplit {
    fn new(a: f64, b: f64, v: f64, omega: f64) -> Self {
        let sd = v.sqrt();
        let alpha_neg = -omega / sd;
        let tilt_var = v / (1.0 + a * v);
        let tilt_shift = (b - a * omega) * tilt_var;
        let tilt_mean = omega + tilt_shift;
        let tilt_sd = tilt_var.sqrt();
        let alpha_pos = tilt_mean / tilt_sd;
        Self {
            log_neg: log_norm_cdf(alpha_neg),
            log_pos: tilted_gaussian_log_mass(a, b, v, omega) + log_norm_cdf(alpha_pos),
            tilt_mean,
            tilt_sd,
            tilt_shift,
            alpha_pos,
            alpha_neg,
        }
    }
}

pub(super) fn denoise(ch: &Channel, a: f64, b: f64, v: f64, omega: f64) -> DenoiserOutput {
    let v = floor_var(v);
    match ch.gaussian_noise() {
        Some(noise) => {
            // h | z ~ N(z, noise) integrates z out: h has prior N(ω, S).
            let s = floor_var(v + noise);
            let denom = 1.0 + a * s;
            let post_var = s / denom;
            DenoiserOutput {
                h_hat: omega + (b - a * omega) * post_var,
                sigma: floor_var(post_var),
                g: (b - a * omega) / denom,
                eta: -a / denom,
            }
        }
        None => relu_denoise(a, b, v, omega),
    }
}

fn relu_denoise(a: f64, b: f64, v: f64, omega: f64) -> DenoiserOutput {
    let split = ReluSplit::new(a, b, v, omega);
    let log_z = log_add_exp(split.log_neg, split.log_pos);
    let w_neg = (split.log_neg - log_z).exp();
    let w_pos = (split.log_pos - log_z).exp();

    // z >= 0 part: the tilted Gaussian truncated to [0, ∞).
    let lam_pos = inv_mills(split.alpha_pos);
    let s = split.tilt_sd;
    let mean_pos = split.tilt_mean + s * lam_pos;
    let var_pos = (s * s * (1.0 - split.alpha_pos * lam_pos - lam_pos * lam_pos)).max(0.0);
    // z < 0 part: N(ω, V) truncated to (−∞, 0).
    let sd = v.sqrt();
    let lam_neg = inv_mills(split.alpha_neg);
    let shift_neg = -sd * lam_neg;
    let mean_neg = omega + shift_neg;
    let var_neg = (v * (1.0 - split.alpha_neg * lam_neg - lam_neg * lam_neg)).max(0.0);

    let h_hat = w_pos * mean_pos;
    let sigma = w_pos * var_pos + w_pos * w_neg * mean_pos * mean_pos;

    let mean_shift = w_neg * shift_neg + w_pos * (split.tilt_shift + s * lam_pos);
    let var_z = w_neg * var_neg + w_pos * var_pos + w_neg * w_pos * (mean_pos - mean_neg).powi(2);
    DenoiserOutput {
        h_hat,
        sigma: sigma.max(0.0),
        g: mean_shift / v,
        eta: (var_z - v) / (v * v),
    }
}
