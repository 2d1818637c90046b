use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, C64};
use crate::quantum::hamiltonian::Hamiltonian;
use crate::quantum::krylov::{self, KrylovOptions};
use crate::quantum::state::{ManyBodyState, Provenance, StateData};

/// Default tolerance below which the two lowest levels count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dense below `dense_threshold`, Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    pub dense_threshold: usize,
    pub degeneracy_tol: f64,
    pub krylov: KrylovOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            dense_threshold: 1024,
            degeneracy_tol: DEGENERACY_TOL,
            krylov: KrylovOptions::default(),
        }
    }
}

impl SolverOptions {
    fn use_dense(&self, dim: usize) -> bool {
        match self.method {
            Method::Dense => true,
            Method::Krylov => false,
            Method::Auto => dim <= self.dense_threshold,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub energy: f64,
    /// `E_1 - E_0`, levels counted with multiplicity.
    pub gap: f64,
    pub state: ManyBodyState,
    pub degenerate: bool,
}

/// Fixes the global phase: the largest-magnitude amplitude becomes real positive.
fn fix_phase(mut v: CVector) -> CVector {
    if let Some(pivot) = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) {
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            v.iter_mut().for_each(|z| *z *= phase);
        }
    }
    v
}

pub fn ground_state(h: &Hamiltonian, opts: &SolverOptions) -> Result<GroundStateResult> {
    let (e0, e1, psi) = if opts.use_dense(h.dim()) {
        let eig = h.spectrum()?;
        let e1 = eig.values.get(1).copied().unwrap_or(eig.values[0]);
        (eig.values[0], e1, eig.vectors.column(0).into_owned())
    } else {
        let apply = |v: &CVector| h.apply(v);
        let (e0, v0) = krylov::lowest_eigenpair(apply, h.dim(), &[], &opts.krylov)?;
        let (e1, _) = krylov::lowest_eigenpair(apply, h.dim(), std::slice::from_ref(&v0), &opts.krylov)?;
        (e0, e1, v0)
    };
    let gap = (e1 - e0).max(0.0);
    let psi = fix_phase(psi);
    let psi = psi.unscale(psi.norm());
    Ok(GroundStateResult {
        energy: e0,
        gap,
        degenerate: gap < opts.degeneracy_tol,
        state: ManyBodyState::from_parts(h.num_sites(), h.local_dim(), StateData::Pure(psi), Provenance::Ground),
    })
}

/// Gibbs state `exp(-beta H) / Tr exp(-beta H)`.
pub fn thermal_state(h: &Hamiltonian, beta: f64) -> Result<ManyBodyState> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("inverse temperature {beta}")));
    }
    h.check_dense()?;
    let dim = h.dim();
    let rho = if beta == 0.0 {
        linalg::identity(dim).unscale(dim as f64)
    } else {
        let eig = h.spectrum()?;
        let e0 = eig.values[0];
        let z: f64 = eig.values.iter().map(|e| (-beta * (e - e0)).exp()).sum();
        linalg::hermitian_part(&eig.apply_fn(|e| C64::new((-beta * (e - e0)).exp() / z, 0.0)))
    };
    Ok(ManyBodyState::from_parts(
        h.num_sites(),
        h.local_dim(),
        StateData::Mixed(rho),
        Provenance::Thermal { beta },
    ))
}

/// Eigenvalues of the Gibbs state, in the order of the ascending spectrum of `h`.
pub fn boltzmann_weights(h: &Hamiltonian, beta: f64) -> Result<Vec<f64>> {
    let eig = h.spectrum()?;
    let e0 = eig.values[0];
    let raw: Vec<f64> = eig.values.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// Schrödinger-picture evolution `rho(t) = e^{-itH} rho e^{itH}`.
pub fn evolve_state(h: &Hamiltonian, state: &ManyBodyState, t: f64, opts: &SolverOptions) -> Result<ManyBodyState> {
    if state.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: state.dim() });
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t}")));
    }
    let elapsed = match state.provenance() {
        Provenance::Quench { t: t0 } => t0 + t,
        _ => t,
    };
    if t == 0.0 {
        return Ok(state.clone().with_provenance(Provenance::Quench { t: elapsed }));
    }
    let data = match state.data() {
        StateData::Pure(psi) if !opts.use_dense(h.dim()) => {
            StateData::Pure(krylov::evolve(|v| h.apply(v), psi, t, &opts.krylov)?)
        }
        StateData::Pure(psi) => {
            StateData::Pure(h.spectrum()?.apply_fn_to(|e| C64::new(0.0, -t * e).exp(), psi))
        }
        StateData::Mixed(rho) => {
            let u = h.spectrum()?.apply_fn(|e| C64::new(0.0, -t * e).exp());
            StateData::Mixed(linalg::hermitian_part(&(&u * rho * u.adjoint())))
        }
    };
    Ok(ManyBodyState::from_parts(
        state.num_sites(),
        state.local_dim(),
        data,
        Provenance::Quench { t: elapsed },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec, Region};
    use crate::linalg::{CMatrix, ONE, ZERO};
    use crate::quantum::hamiltonian::{build_hamiltonian, HamiltonianSpec, Model};
    use crate::quantum::operator::{LocalOperator, Pauli};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_site(matrix: CMatrix) -> Hamiltonian {
        let l = build_lattice(LatticeSpec::chain(1)).unwrap();
        let mut spec = HamiltonianSpec::new(vec![]);
        spec.push(Region::single(0), matrix);
        build_hamiltonian(&l, &spec).unwrap()
    }

    fn tfim(n: usize, g: f64) -> Hamiltonian {
        let l = build_lattice(LatticeSpec::chain(n)).unwrap();
        build_hamiltonian(&l, &Model::Tfim { j: 1.0, g }.spec(&l).unwrap()).unwrap()
    }

    #[test]
    fn ground_state_of_minus_z() {
        let gs = ground_state(&single_site(Pauli::Z.matrix().scale(-1.0)), &SolverOptions::default()).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-14);
        assert!((gs.gap - 2.0).abs() < 1e-14);
        assert!(!gs.degenerate);
        let StateData::Pure(psi) = gs.state.data() else { panic!() };
        assert!((psi[0] - ONE).norm() < 1e-14);
    }

    #[test]
    fn zero_hamiltonian_is_degenerate() {
        let l = build_lattice(LatticeSpec::chain(2)).unwrap();
        let h = build_hamiltonian(&l, &HamiltonianSpec::new(vec![])).unwrap();
        let gs = ground_state(&h, &SolverOptions::default()).unwrap();
        assert_eq!(gs.energy, 0.0);
        assert!(gs.degenerate);
    }

    #[test]
    fn two_site_tfim_against_closed_form() {
        // H = -ZZ - X1 - X2. The even-parity block {|00>+|11>, |01>+|10>} gives
        // [[-1, -2], [-2, 1]] with eigenvalues -sqrt(5), sqrt(5); the odd block
        // {|00>-|11>, |01>-|10>} is diag(-1, 1).
        let gs = ground_state(&tfim(2, 1.0), &SolverOptions::default()).unwrap();
        assert!((gs.energy + 5f64.sqrt()).abs() < 1e-12);
        assert!((gs.gap - (5f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn krylov_ground_state_agrees_with_dense() {
        let h = tfim(10, 1.3);
        let dense = ground_state(&h, &SolverOptions { method: Method::Dense, ..Default::default() }).unwrap();
        let kry = ground_state(&h, &SolverOptions { method: Method::Krylov, ..Default::default() }).unwrap();
        assert!((dense.energy - kry.energy).abs() < 1e-8);
        assert!((dense.gap - kry.gap).abs() < 1e-8);
        let (StateData::Pure(a), StateData::Pure(b)) = (dense.state.data(), kry.state.data()) else { panic!() };
        assert!((a.dotc(b).norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn thermal_infinite_temperature_and_closed_form() {
        let h = tfim(3, 0.5);
        let rho = thermal_state(&h, 0.0).unwrap().density_matrix();
        assert!((rho - linalg::identity(8).scale(0.125)).norm() < 1e-15);

        let h = single_site(Pauli::Z.matrix().scale(-1.0));
        for beta in [0.3, 1.0, 2.5] {
            let rho = thermal_state(&h, beta).unwrap().density_matrix();
            let z = 2.0 * beta.cosh();
            assert!((rho[(0, 0)].re - beta.exp() / z).abs() < 1e-14);
            assert!((rho[(1, 1)].re - (-beta).exp() / z).abs() < 1e-14);
        }
        assert!(thermal_state(&h, -1.0).is_err());
    }

    #[test]
    fn low_temperature_approaches_ground_projector() {
        let h = tfim(4, 1.5);
        let gs = ground_state(&h, &SolverOptions::default()).unwrap();
        for beta in [5.0, 10.0, 50.0] {
            let rho = thermal_state(&h, beta).unwrap().density_matrix();
            let diff = rho - gs.state.density_matrix();
            let trace_distance = 0.5 * linalg::trace_norm(&diff);
            // 1e-12 covers rounding once the analytic bound drops below machine precision.
            assert!(trace_distance <= (-beta * gs.gap).exp() * h.dim() as f64 + 1e-12);
        }
    }

    #[test]
    fn thermal_states_are_full_rank() {
        let h = tfim(4, 1.0);
        for beta in [0.1, 1.0] {
            let rho = thermal_state(&h, beta).unwrap().density_matrix();
            assert!(linalg::eigvalsh(&rho)[0] > 0.0);
        }
        for beta in [5.0, 40.0] {
            assert!(boltzmann_weights(&h, beta).unwrap().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn rabi_oscillation() {
        let h = single_site(Pauli::X.matrix());
        let psi = CVector::from_vec(vec![ONE, ZERO]);
        let st = ManyBodyState::pure(1, 2, psi, Provenance::Product).unwrap();
        let z = LocalOperator::pauli(0, Pauli::Z);
        for t in [0.3, 1.1] {
            let ev = evolve_state(&h, &st, t, &SolverOptions::default()).unwrap();
            assert!((ev.expect(&[&z]).unwrap() - (2.0 * t).cos()).abs() < 1e-12);
            let mixed = ManyBodyState::mixed(1, 2, st.density_matrix(), Provenance::Product).unwrap();
            let ev = evolve_state(&h, &mixed, t, &SolverOptions::default()).unwrap();
            assert!((ev.expect(&[&z]).unwrap() - (2.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_and_stationary_states() {
        let h = tfim(3, 0.8);
        let gs = ground_state(&h, &SolverOptions::default()).unwrap();
        let same = evolve_state(&h, &gs.state, 0.0, &SolverOptions::default()).unwrap();
        assert_eq!(same.density_matrix(), gs.state.density_matrix());
        let th = thermal_state(&h, 0.7).unwrap();
        let later = evolve_state(&h, &th, 2.3, &SolverOptions::default()).unwrap();
        assert!((later.density_matrix() - th.density_matrix()).norm() < 1e-10);
    }

    #[test]
    fn evolution_preserves_spectrum_and_agrees_with_krylov() {
        let h = tfim(8, 1.1);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let rho = linalg::random_density_matrix(&mut rng, 256);
        let st = ManyBodyState::mixed(8, 2, rho.clone(), Provenance::Custom).unwrap();
        let ev = evolve_state(&h, &st, 0.9, &SolverOptions::default()).unwrap();
        let before = linalg::eigvalsh(&rho);
        let after = linalg::eigvalsh(&ev.density_matrix());
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((linalg::trace(&ev.density_matrix()).re - 1.0).abs() < 1e-8);

        let psi = linalg::random_unit_vector(&mut rng, 256);
        let pure = ManyBodyState::pure(8, 2, psi, Provenance::Custom).unwrap();
        let dense = evolve_state(&h, &pure, 1.7, &SolverOptions { method: Method::Dense, ..Default::default() }).unwrap();
        let kry = evolve_state(&h, &pure, 1.7, &SolverOptions { method: Method::Krylov, ..Default::default() }).unwrap();
        let (StateData::Pure(a), StateData::Pure(b)) = (dense.data(), kry.data()) else { panic!() };
        assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn variational_principle() {
        let h = tfim(4, 0.9);
        let dense = h.to_dense().unwrap();
        let e0 = ground_state(&h, &SolverOptions::default()).unwrap().energy;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let rho = linalg::random_density_matrix(&mut rng, 16);
            assert!(e0 <= linalg::trace(&(&rho * &dense)).re + 1e-12);
        }
    }
}
