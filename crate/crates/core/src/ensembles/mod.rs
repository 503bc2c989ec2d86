//! Sensing-matrix ensembles: multi-channel convolutions, dense Gaussian
//! matrices, the operator abstraction used by AMP, and the block-circulant
//! permutation.

pub mod container;
pub mod dense;
pub mod fft;
pub mod filter;
pub mod mcc;
pub mod operator;
pub mod permutation;

pub use container::MatrixContainer;
pub use dense::{sample_dense_gaussian, DenseMatrix};
pub use fft::{apply_fft, MccFft};
pub use filter::{default_profile, sample_conv_filter, ConvFilter};
pub use mcc::{sample_mcc, sample_mcc_structured, MccMatrix};
pub use operator::{LinearOperator, MatvecPath, OperatorKind};
pub use permutation::{build_permutations, PermutationPair, StructureViolation};
