//! One-bit compressed sensing toolkit.
//!
//! Recovers `k`-sparse vectors from the signs of linear or affine
//! measurements (possibly corrupted by random label flips) with an
//! ℓ1-norm support vector machine followed by top-`k` truncation, and
//! provides the tools to check the learning-theoretic picture around it:
//!
//! * [`sparse`]: sparse vectors, bipolar labels, truncation and norms.
//! * [`measurement`]: seeded measurement ensembles, sign labels and the
//!   binary symmetric label channel.
//! * [`lp`]: a dense bounded-variable two-phase simplex solver.
//! * [`solvers`]: the ℓ1-SVM recovery programs and the hard-constraint
//!   baselines.
//! * [`metrics`]: generalization error, noisy risk, Goemans–Williamson
//!   bounds and recovery reports.
//! * [`vc`]: VC-dimension bounds for sparse halfspaces, the shattering
//!   witness and an LP shattering oracle.
//! * [`complexity`]: PAC sample-complexity and rate calculators.
//! * [`experiment`]: the seeded sweep harness and its CSV outputs.

pub mod complexity;
pub mod error;
pub mod experiment;
pub mod lp;
pub mod measurement;
pub mod metrics;
pub mod rng;
pub mod solvers;
pub mod sparse;
pub mod vc;

pub use error::{Error, Result};
pub use measurement::{MeasurementSet, NoiseChannel, SamplingDistribution};
pub use solvers::{Method, RecoveryConfig, RecoverySolution};
pub use sparse::{BipolarLabel, SparseVector};
