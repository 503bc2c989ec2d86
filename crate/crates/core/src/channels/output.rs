use super::Channel;
use crate::special::{floor_var, inv_mills, log_norm_cdf, LN_SQRT_2PI};

pub(super) fn log_partition(ch: &Channel, y: f64, v: f64, omega: f64) -> f64 {
    match ch.gaussian_noise() {
        Some(noise) => {
            let s = floor_var(v + noise);
            -0.5 * (y - omega).powi(2) / s - 0.5 * s.ln() - LN_SQRT_2PI
        }
        None => {
            let v = floor_var(v);
            if y > 0.0 {
                -0.5 * (y - omega).powi(2) / v - 0.5 * v.ln() - LN_SQRT_2PI
            } else {
                // Atom at zero: all of z <= 0.
                log_norm_cdf(-omega / v.sqrt())
            }
        }
    }
}

pub(super) fn denoise(ch: &Channel, y: f64, v: f64, omega: f64) -> (f64, f64) {
    match ch.gaussian_noise() {
        Some(noise) => {
            let s = floor_var(v + noise);
            ((y - omega) / s, -1.0 / s)
        }
        None => {
            let v = floor_var(v);
            if y > 0.0 {
                ((y - omega) / v, -1.0 / v)
            } else {
                let sd = v.sqrt();
                let alpha = -omega / sd;
                let r = inv_mills(alpha);
                (-r / sd, -r * (alpha + r) / v)
            }
        }
    }
}
