use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use super::fft::MccFft;
use super::mcc::MccMatrix;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    DenseGaussian,
    Mcc,
    MccStructured,
}

/// Which algorithm applies an MCC operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatvecPath {
    #[default]
    Sparse,
    Fft,
}

#[derive(Debug, Clone)]
enum Repr {
    Dense { m: DenseMatrix, sq: DenseMatrix },
    Mcc { m: MccMatrix, sq: MccMatrix, fft: Option<Box<(MccFft, MccFft)>> },
}

/// A layer weight matrix as seen by the AMP engine: forward, transpose and
/// squared-entry products. Immutable once built; safe to share across threads.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    kind: OperatorKind,
    repr: Repr,
}

impl LinearOperator {
    pub fn dense(m: DenseMatrix) -> Self {
        let sq = m.squared();
        Self { kind: OperatorKind::DenseGaussian, repr: Repr::Dense { m, sq } }
    }

    pub fn mcc(m: MccMatrix, path: MatvecPath) -> Self {
        let kind = if m.profile().is_some() { OperatorKind::MccStructured } else { OperatorKind::Mcc };
        let sq = m.squared();
        let fft = match path {
            MatvecPath::Sparse => None,
            MatvecPath::Fft => Some(Box::new((MccFft::new(&m), MccFft::new(&sq)))),
        };
        Self { kind, repr: Repr::Mcc { m, sq, fft } }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn path(&self) -> Option<MatvecPath> {
        match &self.repr {
            Repr::Dense { .. } => None,
            Repr::Mcc { fft: Some(_), .. } => Some(MatvecPath::Fft),
            Repr::Mcc { fft: None, .. } => Some(MatvecPath::Sparse),
        }
    }

    pub fn rows(&self) -> usize {
        match &self.repr {
            Repr::Dense { m, .. } => m.rows(),
            Repr::Mcc { m, .. } => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match &self.repr {
            Repr::Dense { m, .. } => m.cols(),
            Repr::Mcc { m, .. } => m.cols(),
        }
    }

    /// Aspect ratio `rows / cols` (equal to `D/P` for MCC operators).
    pub fn aspect_ratio(&self) -> f64 {
        self.rows() as f64 / self.cols() as f64
    }

    pub fn as_mcc(&self) -> Option<&MccMatrix> {
        match &self.repr {
            Repr::Mcc { m, .. } => Some(m),
            Repr::Dense { .. } => None,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match &self.repr {
            Repr::Dense { m, .. } => m.clone(),
            Repr::Mcc { m, .. } => m.to_dense(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Dense { m, .. } => m.apply(v),
            Repr::Mcc { fft: Some(f), .. } => f.0.apply(v),
            Repr::Mcc { m, .. } => m.apply_sparse(v),
        }
    }

    pub fn transpose_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Dense { m, .. } => m.transpose_apply(u),
            Repr::Mcc { fft: Some(f), .. } => f.0.transpose_apply(u),
            Repr::Mcc { m, .. } => m.transpose_apply_sparse(u),
        }
    }

    /// `(W∘W) v`.
    pub fn squared_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Dense { sq, .. } => sq.apply(v),
            Repr::Mcc { fft: Some(f), .. } => f.1.apply(v),
            Repr::Mcc { sq, .. } => sq.apply_sparse(v),
        }
    }

    /// `(W∘W)ᵀ u`.
    pub fn squared_transpose_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Dense { sq, .. } => sq.transpose_apply(u),
            Repr::Mcc { fft: Some(f), .. } => f.1.transpose_apply(u),
            Repr::Mcc { sq, .. } => sq.transpose_apply_sparse(u),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::dense::sample_dense_gaussian;
    use crate::ensembles::mcc::sample_mcc;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_vector_maps_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let op = LinearOperator::mcc(sample_mcc(3, 2, 5, 2, &mut rng).unwrap(), MatvecPath::Fft);
        assert!(op.squared_apply(&[0.0; 10]).unwrap().iter().all(|x| *x == 0.0));
        assert!(op.squared_transpose_apply(&[0.0; 15]).unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn mcc_rows_have_unit_mean_square_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = LinearOperator::mcc(sample_mcc(8, 256, 10, 3, &mut rng).unwrap(), MatvecPath::Sparse);
        let sums = op.squared_apply(&vec![1.0; op.cols()]).unwrap();
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn dense_rows_have_unit_mean_square_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (p, q, d) = (64, 10, 32);
        let op = LinearOperator::dense(sample_dense_gaussian(d * q, p * q, 1.0 / (p * q) as f64, &mut rng).unwrap());
        let sums = op.squared_apply(&vec![1.0; op.cols()]).unwrap();
        for s in &sums {
            assert!((s - 1.0).abs() < 0.25);
        }
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        assert!((mean - 1.0).abs() < 0.02);
        assert_eq!(op.aspect_ratio(), 0.5);
    }

    #[test]
    fn kind_reflects_ensemble() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = crate::ensembles::mcc::sample_mcc_structured(2, 2, 4, &[1.0, 0.5], &mut rng).unwrap();
        assert_eq!(LinearOperator::mcc(m, MatvecPath::Sparse).kind(), OperatorKind::MccStructured);
        assert_eq!(LinearOperator::dense(DenseMatrix::identity(2)).kind(), OperatorKind::DenseGaussian);
    }
}
