use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::par;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Samples a `rows × cols` matrix with i.i.d. `N(0, variance)` entries.
pub fn sample_dense_gaussian<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return invalid("dense matrix dimensions must be positive");
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return invalid(format!("entry variance must be positive, got {variance}"));
    }
    let sd = variance.sqrt();
    let data = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect();
    Ok(DenseMatrix { rows, cols, data })
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!("{} entries do not fill a {rows}x{cols} matrix", data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn scaled(&self, factor: f64) -> DenseMatrix {
        DenseMatrix { data: self.data.iter().map(|x| x * factor).collect(), ..*self }
    }

    pub fn squared(&self) -> DenseMatrix {
        DenseMatrix { data: self.data.iter().map(|x| x * x).collect(), ..*self }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        DenseMatrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return invalid(format!("vector length {} does not match {} columns", v.len(), self.cols));
        }
        let mut out = vec![0.0; self.rows];
        par::fill_indexed(&mut out, |r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum());
        Ok(out)
    }

    pub fn transpose_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.rows {
            return invalid(format!("vector length {} does not match {} rows", u.len(), self.rows));
        }
        let cols = self.cols;
        let mut out = vec![0.0; cols];
        // Column blocks keep the row-major walk cache friendly.
        let block = 256.min(cols).max(1);
        par::for_each_chunk_mut(&mut out, block, |b, chunk| {
            let c0 = b * block;
            for (r, &ur) in u.iter().enumerate() {
                if ur == 0.0 {
                    continue;
                }
                let row = &self.data[r * cols + c0..r * cols + c0 + chunk.len()];
                for (o, a) in chunk.iter_mut().zip(row) {
                    *o += a * ur;
                }
            }
        });
        Ok(out)
    }
}
