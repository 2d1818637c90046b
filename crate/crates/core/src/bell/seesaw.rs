use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::{self, CMatrix};
use crate::quantum::operator::LocalOperator;
use crate::quantum::state::validate_density_matrix;
use crate::quantum::Reducible;

use super::functional::{Engine, MeasurementAssignment};
use super::inequality::{local_bound_bruteforce, BellInequality, InequalityForm, MAX_ENUMERATED_SETTINGS};

/// Allowed decrease of the objective across one party update (rounding only).
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeesawOptions {
    /// Random starts; start `r` is seeded with `seed + r`.
    pub restarts: usize,
    /// A sweep improving the objective by at most this much ends a run.
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Also start from the optimal deterministic `+-identity` strategy, which
    /// pins the result at or above the local bound.
    pub deterministic_start: bool,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            tol: 1e-9,
            max_sweeps: 500,
            seed: 0,
            deterministic_start: true,
        }
    }
}

/// Best assignment found across all starts.
#[derive(Debug, Clone)]
pub struct SeesawResult {
    pub value: f64,
    pub assignment: MeasurementAssignment,
    /// Whether the winning run met `tol` before `max_sweeps`.
    pub converged: bool,
    pub sweeps: usize,
    /// Index of the winning start; `restarts` denotes the deterministic start.
    pub start: usize,
}

impl SeesawResult {
    /// Alice's and Bob's operators for a two-party result.
    pub fn chsh_operators(&self) -> (&[LocalOperator], &[LocalOperator]) {
        (self.assignment.party(0), self.assignment.party(1))
    }
}

struct Run {
    value: f64,
    ops: Vec<Vec<CMatrix>>,
    converged: bool,
    sweeps: usize,
}

fn optimize(engine: &Engine, settings: &[usize], mut ops: Vec<Vec<CMatrix>>, opts: &SeesawOptions) -> Run {
    let mut value = engine.value(&ops);
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let previous = value;
        for (party, &m) in settings.iter().enumerate() {
            let (operands, rest) = engine.effective(party, m, &ops);
            let objective = |es: &[CMatrix]| -> f64 {
                es.iter()
                    .zip(&operands)
                    .map(|(e, k)| linalg::trace(&(e * k)).re)
                    .sum::<f64>()
                    + rest
            };
            let before = objective(&ops[party]);
            let updated: Vec<CMatrix> = operands.iter().map(linalg::sign_operator).collect();
            let after = objective(&updated);
            assert!(
                after >= before - MONOTONE_TOL,
                "seesaw objective decreased from {before} to {after} at party {party}"
            );
            ops[party] = updated;
            value = after;
        }
        if value - previous <= opts.tol {
            converged = true;
            break;
        }
    }
    Run {
        value,
        ops,
        converged,
        sweeps,
    }
}

fn random_start(dims: &[usize], settings: &[usize], seed: u64) -> Vec<Vec<CMatrix>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dims.iter()
        .zip(settings)
        .map(|(&d, &m)| {
            (0..m)
                .map(|_| linalg::sign_operator(&linalg::random_hermitian(&mut rng, d)))
                .collect()
        })
        .collect()
}

/// Cyclic seesaw over all parties of an arbitrary inequality.
pub fn general_sup_seesaw<S: Reducible + ?Sized>(
    rho: &S,
    ineq: &BellInequality,
    regions: &[Region],
    opts: &SeesawOptions,
) -> Result<SeesawResult> {
    if regions.len() != ineq.parties() {
        return Err(Error::ShapeMismatch(format!(
            "{} regions for {} parties",
            regions.len(),
            ineq.parties()
        )));
    }
    if opts.restarts == 0 && !opts.deterministic_start {
        return Err(Error::InvalidParameter("seesaw needs at least one start".into()));
    }
    let engine = Engine::new(rho, &ineq.terms(), regions)?;
    let settings = ineq.settings();
    let dims = engine.dims().to_vec();

    let deterministic = if opts.deterministic_start && ineq.total_settings() <= MAX_ENUMERATED_SETTINGS {
        let strategy = local_bound_bruteforce(ineq)?.strategy;
        Some(
            strategy
                .iter()
                .zip(&dims)
                .map(|(s, &d)| s.iter().map(|&e| linalg::identity(d).scale(e as f64)).collect())
                .collect::<Vec<Vec<CMatrix>>>(),
        )
    } else {
        None
    };

    let runs: Vec<(usize, Run)> = (0..opts.restarts + usize::from(deterministic.is_some()))
        .into_par_iter()
        .map(|r| {
            let start = if r < opts.restarts {
                random_start(&dims, settings, opts.seed.wrapping_add(r as u64))
            } else {
                deterministic.clone().expect("deterministic start present")
            };
            (r, optimize(&engine, settings, start, opts))
        })
        .collect();

    let (start, best) = runs
        .into_iter()
        .reduce(|a, b| if b.1.value > a.1.value { b } else { a })
        .expect("at least one start");
    let assignment = MeasurementAssignment::from_matrices(regions, rho.local_dim(), best.ops)?;
    Ok(SeesawResult {
        value: best.value,
        assignment,
        converged: best.converged,
        sweeps: best.sweeps,
        start,
    })
}

/// Seesaw restricted to one- and two-body inequalities.
pub fn bell2_sup_seesaw<S: Reducible + ?Sized>(
    rho: &S,
    ineq: &BellInequality,
    regions: &[Region],
    opts: &SeesawOptions,
) -> Result<SeesawResult> {
    if ineq.form() != InequalityForm::TwoBody {
        return Err(Error::ShapeMismatch("inequality has correlators of order > 2".into()));
    }
    general_sup_seesaw(rho, ineq, regions, opts)
}

/// Largest CHSH value found by seesaw for Alice on `x` and Bob on `y`.
pub fn chsh_sup_seesaw<S: Reducible + ?Sized>(rho: &S, x: &Region, y: &Region, opts: &SeesawOptions) -> Result<SeesawResult> {
    general_sup_seesaw(rho, &BellInequality::chsh(), &[x.clone(), y.clone()], opts)
}

/// Exact CHSH supremum over Bob with Alice's pair fixed.
#[derive(Debug, Clone)]
pub struct FixedAliceSup {
    pub value: f64,
    pub b0: LocalOperator,
    pub b1: LocalOperator,
}

/// With `A0, A1` fixed the functional is `Tr(B0 K0) + Tr(B1 K1)` where
/// `K0 = Tr_X[rho ((A0 + A1) ⊗ I)]` and `K1 = Tr_X[rho ((A0 - A1) ⊗ I)]`, so the
/// supremum over `||B|| <= 1` is `||K0||_1 + ||K1||_1`, attained at sign operators.
pub fn chsh_sup_fixed_alice<S: Reducible + ?Sized>(
    rho: &S,
    a0: &LocalOperator,
    a1: &LocalOperator,
    y: &Region,
) -> Result<FixedAliceSup> {
    a0.check_measurement()?;
    a1.check_measurement()?;
    let x = Region::union([a0.support(), a1.support()])?;
    let regions = [x.clone(), y.clone()];
    let engine = Engine::new(rho, &BellInequality::chsh().terms(), &regions)?;
    let alice = vec![a0.padded(&x)?.matrix().clone(), a1.padded(&x)?.matrix().clone()];
    let dim_y = engine.dims()[1];
    let ops = vec![alice, vec![linalg::identity(dim_y); 2]];
    let (operands, rest) = engine.effective(1, 2, &ops);
    let value = operands.iter().map(linalg::trace_norm).sum::<f64>() + rest;
    let d = rho.local_dim();
    let b0 = LocalOperator::new(y.clone(), linalg::sign_operator(&operands[0]), d)?;
    let b1 = LocalOperator::new(y.clone(), linalg::sign_operator(&operands[1]), d)?;
    Ok(FixedAliceSup { value, b0, b1 })
}

/// `2 sqrt(t1 + t2)` from the two largest eigenvalues of `T^T T`, with
/// `T_ab = Tr(rho s_a ⊗ s_b)`: the CHSH maximum over traceless spin observables.
pub fn horodecki_spin_sup(rho: &CMatrix) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::InvalidState(format!("expected a 4x4 density matrix, got {}x{}", rho.nrows(), rho.ncols())));
    }
    validate_density_matrix(rho)?;
    let paulis = [linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z()];
    let t = Matrix3::from_fn(|a, b| linalg::trace(&(rho * linalg::kron(&paulis[a], &paulis[b]))).re);
    let mut eig: Vec<f64> = (t.transpose() * t).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(2.0 * (eig[0] + eig[1]).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::functional::{chsh_value, general_value};
    use crate::bell::inequality::{Correlator, TwoBody};
    use crate::linalg::{CVector, C64, ZERO};
    use crate::quantum::{ManyBodyState, Pauli, Provenance, ReducedState};
    use rand::Rng;

    const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

    fn pair() -> Region {
        Region::new(vec![0, 1]).unwrap()
    }

    fn bell_state(coeffs: [f64; 4]) -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| C64::new(x, 0.0);
        let states = [
            CVector::from_vec(vec![c(h), ZERO, ZERO, c(h)]),
            CVector::from_vec(vec![c(h), ZERO, ZERO, c(-h)]),
            CVector::from_vec(vec![ZERO, c(h), c(h), ZERO]),
            CVector::from_vec(vec![ZERO, c(h), c(-h), ZERO]),
        ];
        states
            .iter()
            .zip(coeffs)
            .fold(CMatrix::zeros(4, 4), |acc, (v, p)| acc + (v * v.adjoint()).scale(p))
    }

    fn two_qubit(rho: CMatrix) -> ReducedState {
        ReducedState::new(pair(), 2, rho).unwrap()
    }

    #[test]
    fn singlet_saturates_tsirelson() {
        let rho = two_qubit(bell_state([0.0, 0.0, 0.0, 1.0]));
        let res = chsh_sup_seesaw(&rho, &Region::single(0), &Region::single(1), &SeesawOptions::default()).unwrap();
        assert!((res.value - TSIRELSON).abs() < 1e-6, "{}", res.value);
        let (a, b) = res.chsh_operators();
        let v = chsh_value(&rho, &a[0], &a[1], &b[0], &b[1]).unwrap();
        assert!((v - res.value).abs() < 1e-9);
        assert!(res.converged);
    }

    #[test]
    fn product_state_stays_at_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let a = linalg::random_density_matrix(&mut rng, 2);
            let b = linalg::random_density_matrix(&mut rng, 2);
            let rho = two_qubit(linalg::kron(&a, &b));
            let res = chsh_sup_seesaw(&rho, &Region::single(0), &Region::single(1), &SeesawOptions::default()).unwrap();
            assert!((res.value - 2.0).abs() < 1e-8, "{}", res.value);
        }
    }

    #[test]
    fn bell_diagonal_states_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let mut p: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= s);
            let rho = bell_state(p);
            let oracle = horodecki_spin_sup(&rho).unwrap().max(2.0);
            let res = chsh_sup_seesaw(&two_qubit(rho), &Region::single(0), &Region::single(1), &SeesawOptions::default()).unwrap();
            assert!((res.value - oracle).abs() < 1e-5, "{} vs {oracle}", res.value);
        }
    }

    #[test]
    fn chsh_sup_stays_between_local_and_tsirelson() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let opts = SeesawOptions { restarts: 4, ..Default::default() };
        for _ in 0..20 {
            let rho = two_qubit(linalg::random_density_matrix(&mut rng, 4));
            let v = chsh_sup_seesaw(&rho, &Region::single(0), &Region::single(1), &opts).unwrap().value;
            assert!((2.0 - 1e-9..=TSIRELSON + 1e-9).contains(&v), "{v}");
        }
    }

    #[test]
    fn horodecki_examples() {
        let phi_plus = bell_state([1.0, 0.0, 0.0, 0.0]);
        assert!((horodecki_spin_sup(&phi_plus).unwrap() - TSIRELSON).abs() < 1e-12);
        let mixed = CMatrix::identity(4, 4).scale(0.25);
        assert_eq!(horodecki_spin_sup(&mixed).unwrap(), 0.0);
        let p = std::f64::consts::FRAC_1_SQRT_2;
        let werner = bell_state([0.0, 0.0, 0.0, 1.0]).scale(p) + mixed.scale(1.0 - p);
        assert!((horodecki_spin_sup(&werner).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(horodecki_spin_sup(&CMatrix::identity(4, 4)), Err(Error::InvalidState(_))));
        assert!(matches!(horodecki_spin_sup(&CMatrix::identity(2, 2)), Err(Error::InvalidState(_))));
    }

    #[test]
    fn fixed_alice_matches_exhaustive_bob_seesaw() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let rho = two_qubit(linalg::random_density_matrix(&mut rng, 4));
            let a0 = LocalOperator::new(Region::single(0), linalg::random_contraction(&mut rng, 2), 2).unwrap();
            let a1 = LocalOperator::new(Region::single(0), linalg::random_contraction(&mut rng, 2), 2).unwrap();
            let sup = chsh_sup_fixed_alice(&rho, &a0, &a1, &Region::single(1)).unwrap();
            let achieved = chsh_value(&rho, &a0, &a1, &sup.b0, &sup.b1).unwrap();
            assert!((achieved - sup.value).abs() < 1e-12);
            // No random Bob does better.
            for _ in 0..50 {
                let b0 = LocalOperator::new(Region::single(1), linalg::random_contraction(&mut rng, 2), 2).unwrap();
                let b1 = LocalOperator::new(Region::single(1), linalg::random_contraction(&mut rng, 2), 2).unwrap();
                assert!(chsh_value(&rho, &a0, &a1, &b0, &b1).unwrap() <= sup.value + 1e-12);
            }
        }
    }

    fn ghz3() -> ManyBodyState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = CVector::zeros(8);
        psi[0] = C64::new(h, 0.0);
        psi[7] = C64::new(h, 0.0);
        ManyBodyState::pure(3, 2, psi, Provenance::Custom).unwrap()
    }

    fn pauli_probe(rng: &mut ChaCha8Rng, regions: &[Region], settings: &[usize]) -> MeasurementAssignment {
        let ops = regions
            .iter()
            .zip(settings)
            .map(|(r, &m)| {
                (0..m)
                    .map(|_| LocalOperator::pauli(r.sites()[0], Pauli::ALL[rng.random_range(0..3)]))
                    .collect()
            })
            .collect();
        MeasurementAssignment::new(regions.to_vec(), ops).unwrap()
    }

    #[test]
    fn two_body_sup_dominates_pauli_probes_on_ghz() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let beta = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .flat_map(|(i, j)| (0..2).flat_map(move |k| (0..2).map(move |l| (i, j, k, l))))
            .map(|(i, j, k, l)| TwoBody { i, j, k, l, coeff: if rng.random::<bool>() { 1.0 } else { -1.0 } })
            .collect();
        let ineq = BellInequality::new(vec![2, 2, 2], vec![], beta, vec![], None).unwrap();
        let regions: Vec<Region> = (0..3).map(Region::single).collect();
        let state = ghz3();
        let sup = bell2_sup_seesaw(&state, &ineq, &regions, &SeesawOptions::default()).unwrap();
        assert!(sup.value >= ineq.delta_c() - 1e-12);
        let mut probe_rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let meas = pauli_probe(&mut probe_rng, &regions, ineq.settings());
            assert!(general_value(&state, &ineq, &meas).unwrap() <= sup.value + 1e-9);
        }
        let achieved = general_value(&state, &ineq, &sup.assignment).unwrap();
        assert!((achieved - sup.value).abs() < 1e-9);
    }

    #[test]
    fn general_sup_on_correlator_chsh_and_mermin() {
        let singlet = two_qubit(bell_state([0.0, 0.0, 0.0, 1.0]));
        let regions = [Region::single(0), Region::single(1)];
        let res = general_sup_seesaw(&singlet, &BellInequality::chsh_correlators(), &regions, &SeesawOptions::default()).unwrap();
        assert!((res.value - TSIRELSON).abs() < 1e-6);

        let terms = [([0, 0, 1], 1.0), ([0, 1, 0], 1.0), ([1, 0, 0], 1.0), ([1, 1, 1], -1.0)];
        let gamma = terms
            .iter()
            .map(|(s, c)| Correlator { parties: vec![0, 1, 2], settings: s.to_vec(), coeff: *c })
            .collect();
        let mermin = BellInequality::new(vec![2, 2, 2], vec![], vec![], gamma, None).unwrap();
        let regions: Vec<Region> = (0..3).map(Region::single).collect();
        let res = general_sup_seesaw(&ghz3(), &mermin, &regions, &SeesawOptions::default()).unwrap();
        // GHZ reaches the algebraic maximum 4 of the Mermin functional.
        assert!((res.value - 4.0).abs() < 1e-6, "{}", res.value);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20 {
            let meas = pauli_probe(&mut rng, &regions, mermin.settings());
            assert!(general_value(&ghz3(), &mermin, &meas).unwrap() <= res.value + 1e-9);
        }
        assert!(matches!(
            bell2_sup_seesaw(&ghz3(), &mermin, &regions, &SeesawOptions::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn seesaw_is_deterministic_for_a_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let rho = two_qubit(linalg::random_density_matrix(&mut rng, 4));
        let opts = SeesawOptions { seed: 77, ..Default::default() };
        let a = chsh_sup_seesaw(&rho, &Region::single(0), &Region::single(1), &opts).unwrap();
        let b = chsh_sup_seesaw(&rho, &Region::single(0), &Region::single(1), &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.start, b.start);
    }

    #[test]
    fn multi_site_regions() {
        // Singlet between sites 1 and 2 of a 4-site product with |0>, |0>.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = CVector::zeros(16);
        psi[0b0010] = C64::new(h, 0.0);
        psi[0b0100] = C64::new(-h, 0.0);
        let state = ManyBodyState::pure(4, 2, psi, Provenance::Custom).unwrap();
        let x = Region::new(vec![0, 1]).unwrap();
        let y = Region::new(vec![2, 3]).unwrap();
        let res = chsh_sup_seesaw(&state, &x, &y, &SeesawOptions::default()).unwrap();
        assert!((res.value - TSIRELSON).abs() < 1e-6, "{}", res.value);
    }
}
