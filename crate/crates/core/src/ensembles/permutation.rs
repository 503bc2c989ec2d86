//! Row and column permutations that reorder an MCC matrix into block-circulant
//! form.
//!
//! Row `i·q + r` (channel `i`, position `r`) moves to `r·D + i`, and column
//! `j·q + c` moves to `c·P + j`. The permuted matrix is a `q × q` grid of
//! `D × P` blocks where block `(r, c)` equals `A^(s)` with
//! `s − 1 = (c − r) mod q` when `s ≤ k` and is zero otherwise;
//! `A^(s)[i][j] = scale · ω_ij[s − 1]`.

use super::dense::DenseMatrix;
use crate::error::{invalid, Result};

/// Index arrays: `permuted[a] = original[row_perm[a]]`, likewise for columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationPair {
    pub d: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
}

pub fn build_permutations(d: usize, p: usize, q: usize, k: usize) -> Result<PermutationPair> {
    if d == 0 || p == 0 || q == 0 || k == 0 || k > q {
        return invalid(format!("invalid MCC dimensions D={d} P={p} q={q} k={k}"));
    }
    let mut row_perm = vec![0; d * q];
    for i in 0..d {
        for r in 0..q {
            row_perm[r * d + i] = i * q + r;
        }
    }
    let mut col_perm = vec![0; p * q];
    for j in 0..p {
        for c in 0..q {
            col_perm[c * p + j] = j * q + c;
        }
    }
    Ok(PermutationPair { d, p, q, k, row_perm, col_perm })
}

fn is_bijection(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &i in perm {
        if i >= perm.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (a, &i) in perm.iter().enumerate() {
        inv[i] = a;
    }
    inv
}

/// A block of the permuted matrix that breaks the expected layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureViolation {
    pub block_row: usize,
    pub block_col: usize,
    pub reason: String,
}

impl std::fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "block ({}, {}): {}", self.block_row, self.block_col, self.reason)
    }
}

impl PermutationPair {
    pub fn is_valid(&self) -> bool {
        self.row_perm.len() == self.d * self.q
            && self.col_perm.len() == self.p * self.q
            && is_bijection(&self.row_perm)
            && is_bijection(&self.col_perm)
    }

    /// `U W Ũᵀ`.
    pub fn permute_matrix(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        if w.rows() != self.row_perm.len() || w.cols() != self.col_perm.len() {
            return invalid(format!(
                "matrix is {}x{}, permutations expect {}x{}",
                w.rows(),
                w.cols(),
                self.row_perm.len(),
                self.col_perm.len()
            ));
        }
        let cols = w.cols();
        let mut data = Vec::with_capacity(w.rows() * cols);
        for &r in &self.row_perm {
            let row = w.row(r);
            data.extend(self.col_perm.iter().map(|&c| row[c]));
        }
        DenseMatrix::from_row_major(w.rows(), cols, data)
    }

    /// `U y` for a vector indexed like the rows.
    pub fn permute_rows(&self, y: &[f64]) -> Vec<f64> {
        self.row_perm.iter().map(|&i| y[i]).collect()
    }

    /// `Ũ x` for a vector indexed like the columns.
    pub fn permute_cols(&self, x: &[f64]) -> Vec<f64> {
        self.col_perm.iter().map(|&i| x[i]).collect()
    }

    /// Inverse of [`permute_cols`](Self::permute_cols).
    pub fn unpermute_cols(&self, x: &[f64]) -> Vec<f64> {
        invert(&self.col_perm).iter().map(|&a| x[a]).collect()
    }

    /// Inverse of [`permute_rows`](Self::permute_rows).
    pub fn unpermute_rows(&self, y: &[f64]) -> Vec<f64> {
        invert(&self.row_perm).iter().map(|&a| y[a]).collect()
    }

    /// Block `(r, c)` of a permuted matrix, row-major `D × P`.
    pub fn block(&self, permuted: &DenseMatrix, r: usize, c: usize) -> Vec<f64> {
        let (d, p) = (self.d, self.p);
        (0..d).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| permuted.get(r * d + i, c * p + j)).collect()
    }

    /// Scans a permuted matrix and returns the `k` distinct dense blocks
    /// `A^(1..k)` when the block-circulant layout holds exactly: every
    /// off-band block is exactly zero and every band block is bit-identical
    /// to the corresponding block of the first block-row.
    pub fn check_block_circulant(&self, permuted: &DenseMatrix) -> std::result::Result<Vec<Vec<f64>>, StructureViolation> {
        let (q, k) = (self.q, self.k);
        let fail = |r, c, reason: String| StructureViolation { block_row: r, block_col: c, reason };
        if permuted.rows() != self.d * q || permuted.cols() != self.p * q {
            return Err(fail(0, 0, "matrix shape does not match permutations".into()));
        }
        let reference: Vec<Vec<f64>> = (0..k).map(|s| self.block(permuted, 0, s)).collect();
        for r in 0..q {
            for c in 0..q {
                let s = (c + q - r) % q;
                let blk = self.block(permuted, r, c);
                if s < k {
                    if blk != reference[s] {
                        return Err(fail(r, c, format!("differs from A^({})", s + 1)));
                    }
                } else if let Some(v) = blk.iter().find(|v| **v != 0.0) {
                    return Err(fail(r, c, format!("expected zero block, found entry {v}")));
                }
            }
        }
        for s in 0..k {
            if reference[s].iter().all(|v| *v == 0.0) {
                return Err(fail(0, s, format!("A^({}) is identically zero", s + 1)));
            }
            for t in 0..s {
                if reference[s] == reference[t] {
                    return Err(fail(0, s, format!("A^({}) duplicates A^({})", s + 1, t + 1)));
                }
            }
        }
        Ok(reference)
    }
}
