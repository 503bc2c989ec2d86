use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ensembles::{sample_mcc, MccFft};
use crate::error::{invalid, Result};

/// Largest dense realization the benchmark will materialize (entries).
const DENSE_LIMIT: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub d: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub reps: usize,
    /// Mean seconds per product; `None` when the dense matrix is too large.
    pub dense_secs: Option<f64>,
    pub sparse_secs: f64,
    pub fft_secs: f64,
    /// Relative L2 error of the sparse and FFT products against the dense
    /// product (or against each other when dense is skipped).
    pub sparse_rel_err: f64,
    pub fft_rel_err: f64,
    /// Independent parameters over dense entries, `k / q²`.
    pub nonzero_ratio: f64,
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn time<F: FnMut() -> Result<Vec<f64>>>(reps: usize, mut f: F) -> Result<(f64, Vec<f64>)> {
    let mut out = f()?;
    let start = Instant::now();
    for _ in 0..reps {
        out = f()?;
    }
    Ok((start.elapsed().as_secs_f64() / reps as f64, out))
}

/// Times `W v` through the dense, sparse and FFT paths on one sampled matrix.
pub fn bench_matvec(d: usize, p: usize, q: usize, k: usize, reps: usize, seed: u64) -> Result<BenchReport> {
    if reps == 0 {
        return invalid("reps must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = sample_mcc(d, p, q, k, &mut rng)?;
    let v: Vec<f64> = (0..m.cols()).map(|_| StandardNormal.sample(&mut rng)).collect();

    let (sparse_secs, sparse) = time(reps, || m.apply_sparse(&v))?;
    let fft = MccFft::new(&m);
    let (fft_secs, fast) = time(reps, || fft.apply(&v))?;
    let (dense_secs, reference) = if m.rows() * m.cols() <= DENSE_LIMIT {
        let dense = m.to_dense();
        let (t, out) = time(reps, || dense.apply(&v))?;
        (Some(t), out)
    } else {
        (None, sparse.clone())
    };
    Ok(BenchReport {
        d,
        p,
        q,
        k,
        reps,
        dense_secs,
        sparse_secs,
        fft_secs,
        sparse_rel_err: rel_err(&sparse, &reference),
        fft_rel_err: rel_err(&fast, &reference),
        nonzero_ratio: k as f64 / (q * q) as f64,
    })
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "matvec benchmark (D, P, q, k) = ({}, {}, {}, {}), {} reps", self.d, self.p, self.q, self.k, self.reps)?;
        writeln!(f, "  nonzero ratio k/q^2 = {:.3e}", self.nonzero_ratio)?;
        match self.dense_secs {
            Some(t) => {
                writeln!(f, "  dense : {:.3e} s", t)?;
                writeln!(f, "  sparse: {:.3e} s (speedup {:.2}x)", self.sparse_secs, t / self.sparse_secs)?;
                writeln!(f, "  fft   : {:.3e} s (speedup {:.2}x)", self.fft_secs, t / self.fft_secs)?;
            }
            None => {
                writeln!(f, "  dense : skipped (matrix too large to materialize)")?;
                writeln!(f, "  sparse: {:.3e} s", self.sparse_secs)?;
                writeln!(f, "  fft   : {:.3e} s", self.fft_secs)?;
            }
        }
        writeln!(f, "  rel. error sparse = {:.2e}, fft = {:.2e}", self.sparse_rel_err, self.fft_rel_err)?;
        if self.k == self.q {
            writeln!(f, "  k = q: the filters fill every block, so the sparse path saves nothing over dense")?;
        }
        Ok(())
    }
}
