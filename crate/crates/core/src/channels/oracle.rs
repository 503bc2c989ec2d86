//! Direct numerical integration of the partition functions
//! `Z^(L)(A, B)`, `Z^(1)(y, V, ω)` and `Z^(l)(A, B, V, ω)` from their
//! defining integrals, plus the posterior moments that yield the denoisers by
//! differentiation under the integral sign. This path shares nothing with the
//! closed forms and exists to validate them.
//!
//! Integration runs over a finite effective support: each window covers the
//! relevant Gaussian centers with a 12-standard-deviation margin, and
//! integrands are rescaled by their maximum on the window before
//! exponentiation.

use super::{Channel, DenoiserOutput, Prior};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{adaptive_gk, AdaptiveOpts};
use crate::special::LN_SQRT_2PI;

const MARGIN: f64 = 12.0;
const GRID: usize = 801;

/// Arguments of one of the three partition functions.
#[derive(Debug, Clone, Copy)]
pub enum PartitionArgs {
    Prior { prior: Prior, a: f64, b: f64 },
    Output { channel: Channel, y: f64, v: f64, omega: f64 },
    Middle { channel: Channel, a: f64, b: f64, v: f64, omega: f64 },
}

fn log_gauss(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (x - mean).powi(2) / var - 0.5 * var.ln() - LN_SQRT_2PI
}

/// Where the tilted Gaussian `N(x; μ, v) e^{Bx − Ax²/2}` peaks.
fn tilt_center(mean: f64, var: f64, a: f64, b: f64) -> f64 {
    (b + mean / var) / (a + 1.0 / var)
}

/// Result of a shifted integral: `∫ e^{lw(x)} f(x) dx = e^{shift} · moments`.
struct Shifted<const N: usize> {
    shift: f64,
    moments: [f64; N],
}

fn integrate_shifted<const N: usize>(
    log_w: impl Fn(f64) -> f64,
    feats: impl Fn(f64) -> [f64; N],
    lo: f64,
    hi: f64,
    breaks: &[f64],
) -> Result<Shifted<N>> {
    if !(lo < hi) {
        return Err(Error::NumericFailure(format!("empty integration window [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (GRID - 1) as f64;
    let grid = (0..GRID).map(|i| lo + step * i as f64);
    let mut shift = f64::NEG_INFINITY;
    let mut mass = 0.0;
    let samples: Vec<f64> = grid.chain(breaks.iter().copied().filter(|p| *p >= lo && *p <= hi)).map(&log_w).collect();
    for &l in &samples {
        shift = shift.max(l);
    }
    if !shift.is_finite() {
        return Err(Error::NumericFailure(format!("integrand vanishes or overflows on [{lo}, {hi}]")));
    }
    for &l in &samples[..GRID] {
        mass += (l - shift).exp() * step;
    }
    let opts = AdaptiveOpts { abs_tol: 1e-12 * mass.max(1e-300), rel_tol: 1e-11, max_intervals: 5000 };
    let moments = adaptive_gk(
        |x| {
            let w = (log_w(x) - shift).exp();
            let mut f = feats(x);
            f.iter_mut().for_each(|v| *v *= w);
            f
        },
        lo,
        hi,
        breaks,
        opts,
    )
    .map_err(|e| Error::NumericFailure(format!("partition-function quadrature failed: {e}")))?;
    if !(moments[0] > 0.0) {
        return Err(Error::NumericFailure(format!("partition function underflowed on [{lo}, {hi}]")));
    }
    Ok(Shifted { shift, moments })
}

fn window(centers: &[f64], sd: f64) -> (f64, f64) {
    let lo = centers.iter().copied().fold(f64::INFINITY, f64::min) - MARGIN * sd;
    let hi = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max) + MARGIN * sd;
    (lo, hi)
}

/// `log Z` by adaptive Gauss–Kronrod quadrature of the defining integral.
pub fn quadrature_log_partition(args: &PartitionArgs) -> Result<f64> {
    match *args {
        PartitionArgs::Prior { prior, a, b } => Ok(prior_integral(&prior, a, b)?.0),
        PartitionArgs::Output { channel, y, v, omega } => Ok(output_integral(&channel, y, v, omega)?.0),
        PartitionArgs::Middle { channel, a, b, v, omega } => Ok(middle_integral(&channel, a, b, v, omega)?.0),
    }
}

/// `(log Z, E[h], Var[h])` under the tilted prior.
fn prior_integral(prior: &Prior, a: f64, b: f64) -> Result<(f64, f64, f64)> {
    prior.validate()?;
    if !(a >= 0.0) {
        return invalid("A must be non-negative");
    }
    let (mean, var, slab_weight) = match *prior {
        Prior::Gaussian { mean, var } => (mean, var, 1.0),
        Prior::GaussBernoulli { rho } => (0.0, 1.0, rho),
    };
    let c = tilt_center(mean, var, a, b);
    let (lo, hi) = window(&[mean, c], var.sqrt());
    let s = integrate_shifted(
        |x| log_gauss(x, mean, var) + b * x - 0.5 * a * x * x,
        |x| [1.0, x - c, (x - c).powi(2)],
        lo,
        hi,
        &[mean, c],
    )?;
    let [m0, m1, m2] = s.moments;
    // Spike mass (1 − ρ) sits at x = 0 where the tilt equals 1.
    let spike = (1.0 - slab_weight) * (-s.shift).exp();
    let z = slab_weight * m0 + spike;
    let log_z = s.shift + z.ln();
    // Moments about c: the atom contributes (0 − c) and c².
    let e1 = (slab_weight * m1 + spike * (-c)) / z;
    let e2 = (slab_weight * m2 + spike * c * c) / z;
    Ok((log_z, c + e1, e2 - e1 * e1))
}

/// `(log Z, E[z] − ω, Var[z])` under the output-layer posterior.
fn output_integral(ch: &Channel, y: f64, v: f64, omega: f64) -> Result<(f64, f64, f64)> {
    ch.validate()?;
    if !(v > 0.0) {
        return invalid("V must be positive");
    }
    let sd = v.sqrt();
    match *ch {
        Channel::Awgn { sigma2 } if sigma2 > 0.0 => {
            let c = tilt_center(omega, v, 1.0 / sigma2, y / sigma2);
            let (lo, hi) = window(&[omega, y, c], v.max(sigma2).sqrt());
            let s = integrate_shifted(
                |z| log_gauss(z, omega, v) + log_gauss(y, z, sigma2),
                |z| [1.0, z - c, (z - c).powi(2)],
                lo,
                hi,
                &[omega, y, c],
            )?;
            let [m0, m1, m2] = s.moments;
            let e1 = m1 / m0;
            Ok((s.shift + m0.ln(), c + e1 - omega, m2 / m0 - e1 * e1))
        }
        // P(y | z) = δ(y − z): the z integral collapses onto z = y.
        Channel::Awgn { .. } | Channel::Identity => Ok((log_gauss(y, omega, v), y - omega, 0.0)),
        Channel::Relu => {
            if y > 0.0 {
                Ok((log_gauss(y, omega, v), y - omega, 0.0))
            } else if y == 0.0 {
                let lo = omega.min(0.0) - MARGIN * sd;
                let c = omega.min(0.0);
                let s = integrate_shifted(
                    |z| log_gauss(z, omega, v),
                    |z| [1.0, z - c, (z - c).powi(2)],
                    lo,
                    0.0,
                    &[c],
                )?;
                let [m0, m1, m2] = s.moments;
                let e1 = m1 / m0;
                Ok((s.shift + m0.ln(), c + e1 - omega, m2 / m0 - e1 * e1))
            } else {
                invalid("relu output must be non-negative")
            }
        }
    }
}

/// Hidden-layer posterior summary: `(log Z, E[h], Var[h], E[z] − ω, Var[z])`.
fn middle_integral(ch: &Channel, a: f64, b: f64, v: f64, omega: f64) -> Result<(f64, f64, f64, f64, f64)> {
    ch.validate()?;
    if !(a >= 0.0) || !(v > 0.0) {
        return invalid("need A >= 0 and V > 0");
    }
    let sd = v.sqrt();
    let tilt = |h: f64| b * h - 0.5 * a * h * h;
    match *ch {
        Channel::Awgn { sigma2 } if sigma2 > 0.0 => middle_awgn_nested(a, b, v, omega, sigma2),
        Channel::Awgn { .. } | Channel::Identity => {
            let c = tilt_center(omega, v, a, b);
            let (lo, hi) = window(&[omega, c], sd);
            let s = integrate_shifted(
                |z| log_gauss(z, omega, v) + tilt(z),
                |z| [1.0, z - c, (z - c).powi(2)],
                lo,
                hi,
                &[omega, c],
            )?;
            let [m0, m1, m2] = s.moments;
            let e1 = m1 / m0;
            let var = m2 / m0 - e1 * e1;
            Ok((s.shift + m0.ln(), c + e1, var, c + e1 - omega, var))
        }
        Channel::Relu => {
            let c = tilt_center(omega, v, a, b);
            let (lo, hi) = window(&[omega, c, 0.0], sd);
            let hc = c.max(0.0);
            let s = integrate_shifted(
                |z| log_gauss(z, omega, v) + tilt(z.max(0.0)),
                |z| {
                    let h = z.max(0.0) - hc;
                    let zz = z - omega;
                    [1.0, h, h * h, zz, zz * zz]
                },
                lo,
                hi,
                &[omega, c, 0.0],
            )?;
            let [m0, m1, m2, m3, m4] = s.moments;
            let (eh, ez) = (m1 / m0, m3 / m0);
            Ok((s.shift + m0.ln(), hc + eh, m2 / m0 - eh * eh, ez, m4 / m0 - ez * ez))
        }
    }
}

/// Noisy hidden channel: `h | z ~ N(z, σ²)`, integrated as a nested
/// `z`-outer, `h`-inner double integral.
fn middle_awgn_nested(a: f64, b: f64, v: f64, omega: f64, noise: f64) -> Result<(f64, f64, f64, f64, f64)> {
    let sd = v.sqrt();
    let noise_sd = noise.sqrt();
    // Inner: log ∫ N(h; z, σ²) e^{Bh − Ah²/2} dh and the first two h moments.
    let inner = |z: f64| -> Result<(f64, f64, f64)> {
        let c = tilt_center(z, noise, a, b);
        let (lo, hi) = window(&[z, c], noise_sd);
        let s = integrate_shifted(
            |h| log_gauss(h, z, noise) + b * h - 0.5 * a * h * h,
            |h| [1.0, h - c, (h - c).powi(2)],
            lo,
            hi,
            &[z, c],
        )?;
        let [m0, m1, m2] = s.moments;
        Ok((s.shift + m0.ln(), c + m1 / m0, m2 / m0 + 2.0 * c * m1 / m0 + c * c))
    };
    let total = v + noise;
    let h_center = tilt_center(omega, total, a, b);
    let (lo, hi) = window(&[omega, h_center], sd);
    let failed = std::cell::Cell::new(None);
    let log_outer = |z: f64| match inner(z) {
        Ok((l, _, _)) => log_gauss(z, omega, v) + l,
        Err(e) => {
            failed.set(Some(e.to_string()));
            f64::NAN
        }
    };
    let s = integrate_shifted(
        log_outer,
        |z| {
            let (_, eh, eh2) = inner(z).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            let zz = z - omega;
            [1.0, eh - h_center, eh2 - 2.0 * h_center * eh + h_center * h_center, zz, zz * zz]
        },
        lo,
        hi,
        &[omega, h_center],
    );
    if let Some(msg) = failed.take() {
        return Err(Error::NumericFailure(msg));
    }
    let s = s?;
    let [m0, m1, m2, m3, m4] = s.moments;
    let (eh, ez) = (m1 / m0, m3 / m0);
    Ok((s.shift + m0.ln(), h_center + eh, m2 / m0 - eh * eh, ez, m4 / m0 - ez * ez))
}

/// Prior denoiser `(h_hat, sigma)` from quadrature moments.
pub fn quadrature_prior_denoise(prior: &Prior, a: f64, b: f64) -> Result<(f64, f64)> {
    let (_, mean, var) = prior_integral(prior, a, b)?;
    Ok((mean, var))
}

/// Output denoiser `(g, eta)` from quadrature moments:
/// `g = (E[z] − ω)/V`, `eta = (Var[z]/V − 1)/V`.
pub fn quadrature_output_denoise(ch: &Channel, y: f64, v: f64, omega: f64) -> Result<(f64, f64)> {
    let (_, shift, var) = output_integral(ch, y, v, omega)?;
    Ok((shift / v, (var / v - 1.0) / v))
}

/// Hidden denoiser from quadrature moments.
pub fn quadrature_middle_denoise(ch: &Channel, a: f64, b: f64, v: f64, omega: f64) -> Result<DenoiserOutput> {
    let (_, h_hat, sigma, shift, var_z) = middle_integral(ch, a, b, v, omega)?;
    Ok(DenoiserOutput { h_hat, sigma, g: shift / v, eta: (var_z / v - 1.0) / v })
}
