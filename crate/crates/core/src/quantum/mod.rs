//! Hamiltonians, many-body states and their manipulation.

pub mod dynamics;
pub mod hamiltonian;
pub mod krylov;
pub mod operator;
pub mod state;

pub use dynamics::{boltzmann_weights, evolve_state, ground_state, thermal_state, GroundStateResult, Method, SolverOptions};
pub use hamiltonian::{build_hamiltonian, Hamiltonian, HamiltonianSpec, Model, Term};
pub use krylov::KrylovOptions;
pub use operator::{LocalOperator, Pauli};
pub use state::{embed, expect, product_state, product_state_pure, reduce, ManyBodyState, Provenance, Reducible, ReducedState, StateData};
