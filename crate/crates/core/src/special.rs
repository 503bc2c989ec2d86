//! Gaussian density, distribution function and tail ratios, evaluated
//! stably far into the tails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Floor applied to every variance before it is used as a divisor.
pub const VARIANCE_FLOOR: f64 = 1e-11;

#[inline]
pub fn floor_var(v: f64) -> f64 {
    v.max(VARIANCE_FLOOR)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Density of N(mean, var) at x.
#[inline]
pub fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Mills ratio `R(x) = (1 - Φ(x)) / φ(x)` for `x >= 0`.
fn mills_ratio(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 5.0 {
        norm_cdf(-x) / norm_pdf(x)
    } else {
        // Continued fraction R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))),
        // evaluated bottom-up.
        let mut tail = x;
        for n in (1..=60).rev() {
            tail = x + n as f64 / tail;
        }
        1.0 / tail
    }
}

/// `log Φ(x)`, accurate for very negative arguments.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > -5.0 {
        norm_cdf(x).ln()
    } else {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(-x).ln()
    }
}

/// Inverse Mills ratio `φ(x) / Φ(x)`.
pub fn inv_mills(x: f64) -> f64 {
    if x > -5.0 {
        norm_pdf(x) / norm_cdf(x)
    } else {
        1.0 / mills_ratio(-x)
    }
}

/// `log(exp(a) + exp(b))`, tolerating infinities.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}
