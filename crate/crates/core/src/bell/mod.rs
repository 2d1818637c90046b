//! Bell functionals, their suprema over norm-bounded observables, local
//! bounds, and locality certificates built from fitted clustering envelopes.

mod bounds;
mod certificate;
mod functional;
mod inequality;
mod seesaw;

pub use bounds::{
    general_bound, lemma1_epsilon, lemma2_bound, quench_epsilon, r_star, RegionLayout,
};
pub use certificate::{certify, BoundFormula, CertificateInputs, FitConstants, LocalityCertificate, SATISFIED_TOL};
pub use functional::{bell2_value, chsh_value, delta_margin, general_value, MeasurementAssignment};
pub use inequality::{
    gamma_constant, local_bound_bruteforce, BellInequality, Correlator, InequalityForm, LocalBound, OneBody,
    TwoBody, LOCAL_BOUND_TOL, MAX_ENUMERATED_SETTINGS,
};
pub use seesaw::{
    bell2_sup_seesaw, chsh_sup_fixed_alice, chsh_sup_seesaw, general_sup_seesaw, horodecki_spin_sup,
    FixedAliceSup, SeesawOptions, SeesawResult, MONOTONE_TOL,
};
