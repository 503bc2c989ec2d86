//! Numerical integration rules: Gauss–Hermite for Gaussian expectations,
//! Gauss–Legendre on finite intervals, and adaptive Gauss–Kronrod used as the
//! validation engine for the partition-function integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Hermite rule for expectations under the standard normal law:
/// `E[f(Z)] ≈ Σ w_i f(x_i)` with `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        // Newton iteration on orthonormal Hermite polynomials (weight e^{-x^2}),
        // then rescaled to the standard normal weight.
        const PIM4: f64 = 0.751_125_544_464_942_5;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let scale = 1.0 / PI.sqrt();
        Self {
            nodes: x.into_iter().map(|t| t * std::f64::consts::SQRT_2).collect(),
            weights: w.into_iter().map(|t| t * scale).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs for the standard normal.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// The `i`-th `(node, weight)` pair.
    pub fn get(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.weights[i])
    }

    /// `E[f(Z)]` for `Z ~ N(0, 1)`.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`, mapped onto arbitrary finite intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self { nodes: x, weights: w }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// `∫_a^b f(x) dx`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights belonging to XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`adaptive_gk`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOpts {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    err: [f64; N],
}

fn gk15<const N: usize>(f: &mut impl FnMut(f64) -> [f64; N], a: f64, b: f64) -> Panel<N> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let center = f(mid);
    for c in 0..N {
        kron[c] = WGK[7] * center[c];
        gauss[c] = WG[3] * center[c];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = f(mid - dx);
        let hi = f(mid + dx);
        for c in 0..N {
            let s = lo[c] + hi[c];
            kron[c] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut err = [0.0; N];
    for c in 0..N {
        value[c] = kron[c] * half;
        err[c] = ((kron[c] - gauss[c]) * half).abs();
    }
    Panel { a, b, value, err }
}

/// Adaptive 15-point Gauss–Kronrod integration of a vector-valued integrand
/// over `[a, b]`, initially split at `breakpoints`. Bisects the worst panel
/// until every component satisfies `err <= abs_tol + rel_tol |value|`.
pub fn adaptive_gk<const N: usize>(
    mut f: impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: AdaptiveOpts,
) -> Result<[f64; N]> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::NumericFailure(format!("bad integration interval [{a}, {b}]")));
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&p| p > a && p < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut panels: Vec<Panel<N>> = cuts.windows(2).map(|w| gk15(&mut f, w[0], w[1])).collect();

    loop {
        let mut total = [0.0; N];
        let mut total_err = [0.0; N];
        for p in &panels {
            for c in 0..N {
                total[c] += p.value[c];
                total_err[c] += p.err[c];
            }
        }
        if total.iter().chain(total_err.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure("non-finite integrand value".into()));
        }
        let done = (0..N).all(|c| total_err[c] <= opts.abs_tol + opts.rel_tol * total[c].abs());
        if done {
            return Ok(total);
        }
        if panels.len() >= opts.max_intervals {
            return Err(Error::NumericFailure(format!(
                "adaptive quadrature did not converge on [{a}, {b}] after {} panels; \
                 estimate {total:?}, error {total_err:?}",
                panels.len()
            )));
        }
        // Split the panel contributing the largest (tolerance-relative) error.
        let worst = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let score = (0..N)
                    .map(|c| p.err[c] / (opts.abs_tol + opts.rel_tol * total[c].abs()))
                    .fold(0.0, f64::max);
                (i, score)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&mut f, p.a, mid));
        panels.push(gk15(&mut f, mid, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_gaussian_moments() {
        let gh = GaussHermite::new(61);
        assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!(gh.expect(|x| x).abs() < 1e-13);
        assert!((gh.expect(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((gh.expect(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        // E[cos Z] = e^{-1/2}
        assert!((gh.expect(f64::cos) - (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn hermite_small_rules() {
        let gh = GaussHermite::new(1);
        assert_eq!(gh.len(), 1);
        assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-14);
        let gh = GaussHermite::new(2);
        assert!((gh.expect(|x| x * x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let v = gl.integrate(-1.0, 3.0, |_| 1.0);
        assert!((v - 4.0).abs() < 1e-14);
    }

    #[test]
    fn kronrod_handles_kinks_and_peaks() {
        let [v] = adaptive_gk(|x| [x.abs()], -1.0, 2.0, &[], AdaptiveOpts::default()).unwrap();
        assert!((v - 2.5).abs() < 1e-10);
        let s = 1e-3;
        let [v] = adaptive_gk(
            |x| [crate::special::gauss_pdf(x, 0.3, s * s)],
            -1.0,
            1.0,
            &[0.3],
            AdaptiveOpts::default(),
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kronrod_rejects_bad_interval() {
        assert!(adaptive_gk(|_| [1.0], 1.0, 0.0, &[], AdaptiveOpts::default()).is_err());
        let opts = AdaptiveOpts { max_intervals: 2, ..Default::default() };
        let r = adaptive_gk(|x| [(1.0 / x.abs().max(1e-300)).sqrt()], -1.0, 1.0, &[], opts);
        assert!(matches!(r, Err(Error::NumericFailure(_))));
    }
}
