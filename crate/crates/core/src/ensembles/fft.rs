//! `O(D P q log q)` products with MCC matrices through length-`q` FFTs.
//!
//! With the dense realization `C[r][c] = pad(ω)[(c - r) mod q]`, a block
//! applies as a circular cross-correlation, `F(C v) = conj(F(pad ω)) · F(v)`,
//! and its transpose as a circular convolution, `F(Cᵀ u) = F(pad ω) · F(u)`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::mcc::MccMatrix;
use crate::error::{invalid, Result};

/// Precomputed filter spectra and FFT plans for one MCC matrix.
#[derive(Clone)]
pub struct MccFft {
    d: usize,
    p: usize,
    q: usize,
    scale: f64,
    /// `F(pad ω_ij)`, indexed `(i * P + j) * q + f`.
    spectra: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MccFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MccFft").field("d", &self.d).field("p", &self.p).field("q", &self.q).finish()
    }
}

impl MccFft {
    pub fn new(m: &MccMatrix) -> Self {
        let (d, p, q, k) = (m.d(), m.p(), m.q(), m.k());
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(q);
        let inverse = planner.plan_fft_inverse(q);
        let mut spectra = vec![Complex::new(0.0, 0.0); d * p * q];
        for (idx, block) in spectra.chunks_mut(q).enumerate() {
            let filt = &m.taps()[idx * k..(idx + 1) * k];
            for (b, &t) in block.iter_mut().zip(filt) {
                *b = Complex::new(t, 0.0);
            }
            forward.process(block);
        }
        Self { d, p, q, scale: m.scale(), spectra, forward, inverse }
    }

    fn channel_spectra(&self, x: &[f64], channels: usize) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        debug_assert_eq!(buf.len(), channels * self.q);
        let mut scratch = vec![Complex::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for block in buf.chunks_mut(self.q) {
            self.forward.process_with_scratch(block, &mut scratch);
        }
        buf
    }

    fn accumulate(&self, input_hat: &[Complex<f64>], out_channels: usize, transpose: bool) -> Vec<f64> {
        let q = self.q;
        let norm = self.scale / q as f64;
        let in_channels = if transpose { self.d } else { self.p };
        let mut out = vec![0.0; out_channels * q];
        crate::par::for_each_chunk_mut(&mut out, q, |o, out_block| {
            let mut acc = vec![Complex::new(0.0, 0.0); q];
            let mut scratch = vec![Complex::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
            for c in 0..in_channels {
                let (i, j) = if transpose { (c, o) } else { (o, c) };
                let spec = &self.spectra[(i * self.p + j) * q..(i * self.p + j + 1) * q];
                let xin = &input_hat[c * q..(c + 1) * q];
                if transpose {
                    for ((a, s), x) in acc.iter_mut().zip(spec).zip(xin) {
                        *a += s * x;
                    }
                } else {
                    for ((a, s), x) in acc.iter_mut().zip(spec).zip(xin) {
                        *a += s.conj() * x;
                    }
                }
            }
            self.inverse.process_with_scratch(&mut acc, &mut scratch);
            for (y, a) in out_block.iter_mut().zip(&acc) {
                *y = a.re * norm;
            }
        });
        out
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.p * self.q {
            return invalid(format!("vector length {} does not match {} columns", v.len(), self.p * self.q));
        }
        let v_hat = self.channel_spectra(v, self.p);
        Ok(self.accumulate(&v_hat, self.d, false))
    }

    /// `Mᵀ u`.
    pub fn transpose_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.d * self.q {
            return invalid(format!("vector length {} does not match {} rows", u.len(), self.d * self.q));
        }
        let u_hat = self.channel_spectra(u, self.d);
        Ok(self.accumulate(&u_hat, self.p, true))
    }
}

/// One-shot FFT product `M v` (plans and spectra are built per call).
pub fn apply_fft(m: &MccMatrix, v: &[f64]) -> Result<Vec<f64>> {
    MccFft::new(m).apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::mcc::sample_mcc;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn matches_dense_for_non_power_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(d, p, q, k) in &[(2, 2, 64, 3), (3, 2, 10, 3), (1, 1, 8, 8), (2, 5, 7, 7), (4, 1, 1, 1)] {
            let m = sample_mcc(d, p, q, k, &mut rng).unwrap();
            let dense = m.to_dense();
            let v: Vec<f64> = (0..p * q).map(|i| ((i * 7 + 3) as f64).sin()).collect();
            let u: Vec<f64> = (0..d * q).map(|i| ((i * 5 + 1) as f64).cos()).collect();
            let plan = MccFft::new(&m);
            assert!(rel_err(&plan.apply(&v).unwrap(), &dense.apply(&v).unwrap()) < 1e-12);
            assert!(rel_err(&plan.transpose_apply(&u).unwrap(), &dense.transpose_apply(&u).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = sample_mcc(2, 2, 4, 2, &mut rng).unwrap();
        assert!(apply_fft(&m, &[0.0; 7]).is_err());
    }
}
