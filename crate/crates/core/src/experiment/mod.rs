//! Reproduction harness: configuration, sweeps over `(β, ρ)` and seeds,
//! CSV/SVG output, structural verification and matvec benchmarks.

pub mod bench;
pub mod config;
pub mod results;
pub mod svg;
pub mod sweep;
pub mod verify;

pub use bench::{bench_matvec, BenchReport};
pub use config::{ExperimentConfig, LayerConfig, MatrixSpec, SweepConfig, SweepPoint};
pub use results::{read_se_csv, read_sweep_csv, write_se_csv, write_sweep_csv, SeRow, SweepRow};
pub use sweep::{run_se_sweep, run_single, run_sweep, SingleRun, SweepOutput};
pub use verify::{verify_permutation, PermutationReport};
