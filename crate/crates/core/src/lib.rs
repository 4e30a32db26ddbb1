//! Benchmarks and certificates for greedy sparse recovery.
//!
//! The crate generates random dictionaries and sparse signals, runs orthogonal
//! matching pursuit (with sparsity or residual termination), subspace pursuit
//! and basis pursuit, computes restricted isometry constants, checks the
//! RIC-based recovery guarantees for OMP that allow a limited number of wrong
//! selections, and drives the phase-transition and wrong-selection experiments.

pub mod ensembles;
pub mod experiments;
pub mod linalg;
pub mod plot;
pub mod guarantees;
pub mod recovery;
pub mod rng;

pub use ensembles::{EnsembleKind, ObservationMatrix, SparseSignal};
pub use linalg::{DenseMatrix, DenseVector};
