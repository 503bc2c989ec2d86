//! Self-describing JSON container for sampled matrices. Floats are written
//! in shortest round-trip form and parsed with correct rounding, so every
//! value survives a save/load cycle bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use super::mcc::MccMatrix;
use super::operator::{LinearOperator, MatvecPath};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatrixContainer {
    Mcc {
        #[serde(rename = "D")]
        d: usize,
        #[serde(rename = "P")]
        p: usize,
        q: usize,
        k: usize,
        scale: f64,
        /// Row-major by `(i, j)`, then tap index.
        taps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rng_seed: Option<u64>,
    },
    MccStructured {
        #[serde(rename = "D")]
        d: usize,
        #[serde(rename = "P")]
        p: usize,
        q: usize,
        k: usize,
        scale: f64,
        taps: Vec<f64>,
        variance_profile: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rng_seed: Option<u64>,
    },
    DenseGaussian {
        rows: usize,
        cols: usize,
        variance: f64,
        /// Row-major entries.
        entries: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rng_seed: Option<u64>,
    },
}

impl MatrixContainer {
    pub fn from_mcc(m: &MccMatrix, rng_seed: Option<u64>) -> Self {
        let (d, p, q, k, scale, taps) = (m.d(), m.p(), m.q(), m.k(), m.scale(), m.taps().to_vec());
        match m.profile() {
            None => MatrixContainer::Mcc { d, p, q, k, scale, taps, rng_seed },
            Some(profile) => MatrixContainer::MccStructured {
                d,
                p,
                q,
                k,
                scale,
                taps,
                variance_profile: profile.to_vec(),
                rng_seed,
            },
        }
    }

    pub fn from_dense(m: &DenseMatrix, variance: f64, rng_seed: Option<u64>) -> Self {
        MatrixContainer::DenseGaussian {
            rows: m.rows(),
            cols: m.cols(),
            variance,
            entries: m.data().to_vec(),
            rng_seed,
        }
    }

    pub fn rng_seed(&self) -> Option<u64> {
        match self {
            MatrixContainer::Mcc { rng_seed, .. }
            | MatrixContainer::MccStructured { rng_seed, .. }
            | MatrixContainer::DenseGaussian { rng_seed, .. } => *rng_seed,
        }
    }

    pub fn to_mcc(&self) -> Result<MccMatrix> {
        match self {
            MatrixContainer::Mcc { d, p, q, k, scale, taps, .. } => {
                MccMatrix::from_taps(*d, *p, *q, *k, taps.clone(), *scale)
            }
            MatrixContainer::MccStructured { d, p, q, k, scale, taps, variance_profile, .. } => {
                MccMatrix::from_taps(*d, *p, *q, *k, taps.clone(), *scale)?.with_profile(Some(variance_profile.clone()))
            }
            MatrixContainer::DenseGaussian { .. } => invalid("container holds a dense matrix, not an MCC matrix"),
        }
    }

    pub fn to_operator(&self, path: MatvecPath) -> Result<LinearOperator> {
        match self {
            MatrixContainer::DenseGaussian { rows, cols, entries, .. } => {
                Ok(LinearOperator::dense(DenseMatrix::from_row_major(*rows, *cols, entries.clone())?))
            }
            _ => Ok(LinearOperator::mcc(self.to_mcc()?, path)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::mcc::{sample_mcc, sample_mcc_structured};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mcc_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = sample_mcc(3, 4, 10, 3, &mut rng).unwrap();
        let c = MatrixContainer::from_mcc(&m, Some(42));
        let back = MatrixContainer::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let m2 = back.to_mcc().unwrap();
        assert!(m.taps().iter().zip(m2.taps()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(m.scale().to_bits(), m2.scale().to_bits());
        assert_eq!(back.rng_seed(), Some(42));
    }

    #[test]
    fn structured_kind_keeps_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = sample_mcc_structured(2, 2, 5, &[1.0, 0.25], &mut rng).unwrap();
        let c = MatrixContainer::from_mcc(&m, None);
        let json = c.to_json().unwrap();
        assert!(json.contains("\"kind\": \"mcc-structured\""));
        assert_eq!(MatrixContainer::from_json(&json).unwrap().to_mcc().unwrap(), m);
    }

    #[test]
    fn field_names_follow_the_container_schema() {
        let m = MccMatrix::from_taps(1, 1, 2, 1, vec![0.5], 1.0).unwrap();
        let json = MatrixContainer::from_mcc(&m, None).to_json().unwrap();
        for key in ["\"kind\"", "\"D\"", "\"P\"", "\"q\"", "\"k\"", "\"scale\"", "\"taps\""] {
            assert!(json.contains(key), "{key} missing from {json}");
        }
    }

    proptest! {
        #[test]
        fn arbitrary_floats_round_trip(taps in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 6),
                                       scale in -1e300f64..1e300) {
            let m = MccMatrix::from_taps(1, 2, 4, 3, taps, scale).unwrap();
            let c = MatrixContainer::from_mcc(&m, Some(7));
            let back = MatrixContainer::from_json(&c.to_json().unwrap()).unwrap().to_mcc().unwrap();
            prop_assert!(m.taps().iter().zip(back.taps()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(m.scale().to_bits(), back.scale().to_bits());
        }
    }
}
