//! Bayes-optimal multi-layer approximate message passing (ML-AMP) for
//! signals observed through multi-channel convolutional (MCC) or dense
//! Gaussian layers, together with the scalar state-evolution recursion that
//! predicts its per-iteration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amp;
pub mod channels;
pub mod ensembles;
pub mod error;
pub mod experiment;
mod par;
pub mod quadrature;
pub mod se;
pub mod special;

pub use error::{Error, Result};
