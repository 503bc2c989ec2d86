use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use super::filter::{sample_conv_filter, validate_profile, ConvFilter};
use crate::error::{invalid, Result};
use crate::par;

/// A multi-channel convolution matrix of shape `Dq × Pq`.
///
/// Block `(i, j)` is the `q × q` circulant whose first row is the zero-padded
/// filter `ω_ij`; row `r` of the block is that row rotated right by `r`
/// positions, so `C[r][c] = pad(ω)[(c - r) mod q]`. Every entry is multiplied
/// by `scale` (`1/√P` for sampled matrices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MccMatrix {
    d: usize,
    p: usize,
    q: usize,
    k: usize,
    /// Taps indexed `(i * P + j) * k + s`.
    taps: Vec<f64>,
    scale: f64,
    /// Per-tap variance profile when sampled from a non-isotropic ensemble.
    profile: Option<Vec<f64>>,
}

fn check_dims(d: usize, p: usize, q: usize, k: usize) -> Result<()> {
    if d == 0 || p == 0 || q == 0 || k == 0 {
        return invalid(format!("MCC dimensions must be positive, got D={d} P={p} q={q} k={k}"));
    }
    if k > q {
        return invalid(format!("filter length k={k} exceeds channel dimension q={q}"));
    }
    Ok(())
}

/// Samples `MCC(D, P, q, k)`: `D·P` independent filters with tap variance
/// `1/k`, scaled by `1/√P`.
pub fn sample_mcc<R: Rng + ?Sized>(d: usize, p: usize, q: usize, k: usize, rng: &mut R) -> Result<MccMatrix> {
    check_dims(d, p, q, k)?;
    let mut taps = Vec::with_capacity(d * p * k);
    for _ in 0..d * p {
        taps.extend_from_slice(sample_conv_filter(k, None, rng)?.taps());
    }
    Ok(MccMatrix { d, p, q, k, taps, scale: 1.0 / (p as f64).sqrt(), profile: None })
}

/// Samples a structured-filter MCC matrix whose taps have independent
/// non-isotropic variances `profile`. Downstream state evolution carries no
/// equivalence guarantee for this ensemble.
pub fn sample_mcc_structured<R: Rng + ?Sized>(
    d: usize,
    p: usize,
    q: usize,
    profile: &[f64],
    rng: &mut R,
) -> Result<MccMatrix> {
    let k = profile.len();
    check_dims(d, p, q, k)?;
    validate_profile(k, profile)?;
    let mut taps = Vec::with_capacity(d * p * k);
    for _ in 0..d * p {
        taps.extend_from_slice(sample_conv_filter(k, Some(profile), rng)?.taps());
    }
    Ok(MccMatrix { d, p, q, k, taps, scale: 1.0 / (p as f64).sqrt(), profile: Some(profile.to_vec()) })
}

impl MccMatrix {
    /// Builds a matrix from explicit taps (indexed `(i * P + j) * k + s`).
    pub fn from_taps(d: usize, p: usize, q: usize, k: usize, taps: Vec<f64>, scale: f64) -> Result<Self> {
        check_dims(d, p, q, k)?;
        if taps.len() != d * p * k {
            return invalid(format!("expected {} taps, got {}", d * p * k, taps.len()));
        }
        if !scale.is_finite() {
            return invalid("scale must be finite");
        }
        Ok(Self { d, p, q, k, taps, scale, profile: None })
    }

    /// Builds a matrix from a row-major `D × P` grid of filters.
    pub fn from_filters(d: usize, p: usize, q: usize, filters: &[ConvFilter], scale: f64) -> Result<Self> {
        if filters.len() != d * p {
            return invalid(format!("expected {} filters, got {}", d * p, filters.len()));
        }
        let k = filters.first().map(ConvFilter::k).unwrap_or(0);
        if filters.iter().any(|f| f.k() != k) {
            return invalid("all filters must have the same length");
        }
        let taps = filters.iter().flat_map(|f| f.taps().iter().copied()).collect();
        Self::from_taps(d, p, q, k, taps, scale)
    }

    pub(crate) fn with_profile(mut self, profile: Option<Vec<f64>>) -> Result<Self> {
        if let Some(p) = &profile {
            validate_profile(self.k, p)?;
        }
        self.profile = profile;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
    pub fn profile(&self) -> Option<&[f64]> {
        self.profile.as_deref()
    }
    pub fn rows(&self) -> usize {
        self.d * self.q
    }
    pub fn cols(&self) -> usize {
        self.p * self.q
    }

    /// Number of independent parameters, `D·P·k`.
    pub fn num_parameters(&self) -> usize {
        self.taps.len()
    }

    /// Taps of filter `(i, j)`.
    pub fn filter(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.p + j) * self.k;
        &self.taps[start..start + self.k]
    }

    /// Entry of the dense realization.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let (i, r) = (row / self.q, row % self.q);
        let (j, c) = (col / self.q, col % self.q);
        let s = (c + self.q - r) % self.q;
        if s < self.k {
            self.scale * self.filter(i, j)[s]
        } else {
            0.0
        }
    }

    /// The full `Dq × Pq` matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        let (rows, cols) = (self.rows(), self.cols());
        let mut data = vec![0.0; rows * cols];
        for (row, out) in data.chunks_mut(cols).enumerate() {
            let (i, r) = (row / self.q, row % self.q);
            for j in 0..self.p {
                for (s, &t) in self.filter(i, j).iter().enumerate() {
                    out[j * self.q + (r + s) % self.q] = self.scale * t;
                }
            }
        }
        DenseMatrix::from_row_major(rows, cols, data).expect("shape is consistent")
    }

    /// The matrix of squared entries: taps squared, scale squared.
    pub fn squared(&self) -> MccMatrix {
        MccMatrix {
            taps: self.taps.iter().map(|t| t * t).collect(),
            scale: self.scale * self.scale,
            profile: None,
            ..*self
        }
    }

    /// Sparse product `M v`, `O(D P q k)`.
    pub fn apply_sparse(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols() {
            return invalid(format!("vector length {} does not match {} columns", v.len(), self.cols()));
        }
        let (q, k, p) = (self.q, self.k, self.p);
        let mut out = vec![0.0; self.rows()];
        par::for_each_chunk_mut(&mut out, q, |i, block| {
            for j in 0..p {
                let filt = self.filter(i, j);
                let vj = &v[j * q..(j + 1) * q];
                for (r, o) in block.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (s, &t) in filt.iter().enumerate().take(k) {
                        let c = r + s;
                        acc += t * vj[if c >= q { c - q } else { c }];
                    }
                    *o += acc;
                }
            }
            block.iter_mut().for_each(|o| *o *= self.scale);
        });
        Ok(out)
    }

    /// Sparse product `Mᵀ u`.
    pub fn transpose_apply_sparse(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.rows() {
            return invalid(format!("vector length {} does not match {} rows", u.len(), self.rows()));
        }
        let (q, d) = (self.q, self.d);
        let mut out = vec![0.0; self.cols()];
        par::for_each_chunk_mut(&mut out, q, |j, block| {
            for i in 0..d {
                let filt = self.filter(i, j);
                let ui = &u[i * q..(i + 1) * q];
                for (c, o) in block.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (s, &t) in filt.iter().enumerate() {
                        // rows r with (c - r) mod q == s
                        acc += t * ui[(c + q - s) % q];
                    }
                    *o += acc;
                }
            }
            block.iter_mut().for_each(|o| *o *= self.scale);
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = sample_mcc(1, 1, 1, 1, &mut rng).unwrap();
        let dense = m.to_dense();
        assert_eq!((dense.rows(), dense.cols()), (1, 1));
        assert_eq!(dense.get(0, 0), m.taps()[0]);
    }

    #[test]
    fn parameter_and_nonzero_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = sample_mcc(2, 2, 4, 3, &mut rng).unwrap();
        assert_eq!(m.num_parameters(), 12);
        let nnz = m.to_dense().data().iter().filter(|x| **x != 0.0).count();
        assert_eq!(nnz, 48);
    }

    #[test]
    fn blocks_are_circulant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = sample_mcc(3, 2, 7, 4, &mut rng).unwrap();
        let dense = m.to_dense();
        for i in 0..3 {
            for j in 0..2 {
                let first: Vec<f64> = (0..7).map(|c| dense.get(i * 7, j * 7 + c)).collect();
                for r in 0..7 {
                    for c in 0..7 {
                        assert_eq!(dense.get(i * 7 + r, j * 7 + c), first[(c + 7 - r) % 7]);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_k_above_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(sample_mcc(2, 2, 3, 4, &mut rng).is_err());
        assert!(sample_mcc(0, 2, 3, 1, &mut rng).is_err());
    }

    #[test]
    fn identity_filter_is_identity() {
        let d = 3;
        let mut taps = vec![0.0; d * d];
        for i in 0..d {
            taps[i * d + i] = 1.0;
        }
        let m = MccMatrix::from_taps(d, d, 5, 1, taps, 1.0).unwrap();
        let v: Vec<f64> = (0..15).map(|i| i as f64 * 0.5 - 2.0).collect();
        assert_eq!(m.apply_sparse(&v).unwrap(), v);
        assert_eq!(m.transpose_apply_sparse(&v).unwrap(), v);
    }

    #[test]
    fn output_block_is_sum_of_channel_convolutions() {
        // MCC(4, 3, 3, 2) with distinct taps, so every entry is traceable.
        let (d, p, q, k) = (4, 3, 3, 2);
        let taps: Vec<f64> = (0..d * p * k).map(|i| 1.0 + i as f64).collect();
        let m = MccMatrix::from_taps(d, p, q, k, taps, 1.0).unwrap();
        let v: Vec<f64> = (0..p * q).map(|i| (i as f64).sin()).collect();
        let out = m.apply_sparse(&v).unwrap();
        for i in 0..d {
            for r in 0..q {
                let mut expect = 0.0;
                for j in 0..p {
                    for c in 0..q {
                        let s = (c + q - r) % q;
                        if s < k {
                            expect += m.filter(i, j)[s] * v[j * q + c];
                        }
                    }
                }
                assert!((out[i * q + r] - expect).abs() < 1e-12);
            }
        }
    }
}
