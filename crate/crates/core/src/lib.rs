//! Spin-lattice simulation and Bell-nonlocality certification.
//!
//! The crate prepares ground, thermal and quenched states of short-range
//! lattice Hamiltonians, fits exponential clustering envelopes to their
//! connected correlations, optimizes Bell functionals over norm-bounded
//! observables, and turns fitted envelopes into locality certificates.

pub mod bell;
pub mod clustering;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod quantum;
pub mod tensor;

pub use error::{Error, Result};
pub use lattice::{build_lattice, region_distance, validate_disjoint, Lattice, LatticeSpec, Region};
pub use quantum::{LocalOperator, ManyBodyState, Pauli, Provenance};
