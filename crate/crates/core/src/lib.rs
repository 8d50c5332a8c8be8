//! Small, fully-valid, diverse test suites from CNF constraint models.
//!
//! The sampler clusters known-valid solutions, mutates the binarized cluster
//! centroids with frequency-weighted XOR deltas, verifies every candidate and
//! repairs failures by re-solving with the mutated bits pinned. A simple
//! XOR-combination baseline and a benchmark harness live alongside it.

pub mod baseline;
pub mod bench;
pub mod bits;
pub mod cluster;
pub mod cnf;
pub mod delta;
pub mod engine;
mod error;
pub mod metrics;
pub mod planted;
pub mod solver;
pub mod suite;

pub use crate::baseline::{eq1_validity_probe, run_baseline, BaselineConfig};
pub use crate::bits::BitVector;
pub use crate::cluster::{binarize_centroid, kmeans, ClusterModel};
pub use crate::cnf::{
    evaluate, falsified_clauses, parse_dimacs, Assignment, CnfFormula, Lit, ParseError,
    PartialAssignment,
};
pub use crate::delta::{identical_delta_count, xor, Delta, DeltaPool};
pub use crate::engine::{mutate, repair, run, should_continue, RepairOutcome, RunConfig};
pub use crate::error::{Error, Result};
pub use crate::metrics::{entropy, entropy_histogram, ncd, HistogramBucket};
pub use crate::planted::gen_planted;
pub use crate::solver::{generate_distinct, solve, CallCounters, SolveResult, SolverBackend, SolverKind};
pub use crate::suite::{Origin, RunStats, Suite};
