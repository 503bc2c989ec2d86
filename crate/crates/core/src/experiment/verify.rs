use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensembles::{build_permutations, sample_mcc, StructureViolation};
use crate::error::Result;

/// Outcome of the block-circulant structure check on one sampled matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationReport {
    pub d: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub violation: Option<StructureViolation>,
    /// `layout[r][c]` is `s` when block `(r, c)` equals `A^(s)`, 0 for a zero block.
    pub layout: Vec<Vec<usize>>,
}

impl PermutationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Block `(r, c)` holds `A^(s)` with `s - 1 = (c - r) mod q` when that is
/// below `k`, and zeros otherwise.
pub fn expected_layout(q: usize, k: usize) -> Vec<Vec<usize>> {
    (0..q).map(|r| (0..q).map(|c| (c + q - r) % q).map(|s| if s < k { s + 1 } else { 0 }).collect()).collect()
}

/// Samples an MCC matrix, permutes it and checks the layout exactly.
pub fn verify_permutation(d: usize, p: usize, q: usize, k: usize, seed: u64) -> Result<PermutationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = sample_mcc(d, p, q, k, &mut rng)?;
    let perms = build_permutations(d, p, q, k)?;
    let permuted = perms.permute_matrix(&m.to_dense())?;
    let violation = perms.check_block_circulant(&permuted).err();
    Ok(PermutationReport { d, p, q, k, violation, layout: expected_layout(q, k) })
}

impl fmt::Display for PermutationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (d, p, q, k) = (self.d, self.p, self.q, self.k);
        match &self.violation {
            None => writeln!(f, "PASS (D, P, q, k) = ({d}, {p}, {q}, {k}): block-circulant with {k} dense {d}x{p} blocks")?,
            Some(v) => writeln!(f, "FAIL (D, P, q, k) = ({d}, {p}, {q}, {k}): first offending {v}")?,
        }
        if q <= 16 {
            for row in &self.layout {
                let cells: Vec<String> = row.iter().map(|&s| if s == 0 { "0".into() } else { format!("A{s}") }).collect();
                writeln!(f, "  [{}]", cells.join(" "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_layout_case() {
        let r = verify_permutation(4, 3, 3, 2, 0).unwrap();
        assert!(r.passed());
        assert_eq!(r.layout, vec![vec![1, 2, 0], vec![0, 1, 2], vec![2, 0, 1]]);
        assert!(r.to_string().contains("[A1 A2 0]"));
    }

    #[test]
    fn edge_cases() {
        assert!(verify_permutation(1, 1, 7, 4, 1).unwrap().passed());
        assert!(verify_permutation(3, 5, 7, 7, 2).unwrap().passed());
    }
}
