use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Region};
use crate::linalg::{self, CMatrix, CVector};
use crate::quantum::operator::{check_disjoint_supports, LocalOperator};
use crate::tensor;

/// Tolerance for state validity checks (norm, trace, positivity).
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Ground,
    Thermal { beta: f64 },
    Quench { t: f64 },
    Product,
    Custom,
}

#[derive(Debug, Clone)]
pub enum StateData {
    Pure(CVector),
    Mixed(CMatrix),
}

/// A state of the whole lattice.
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    num_sites: usize,
    local_dim: usize,
    data: StateData,
    provenance: Provenance,
}

impl ManyBodyState {
    pub fn pure(num_sites: usize, local_dim: usize, psi: CVector, provenance: Provenance) -> Result<Self> {
        let dim = local_dim.pow(num_sites as u32);
        if psi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("pure state norm {norm}")));
        }
        Ok(Self::from_parts(num_sites, local_dim, StateData::Pure(psi), provenance))
    }

    pub fn mixed(num_sites: usize, local_dim: usize, rho: CMatrix, provenance: Provenance) -> Result<Self> {
        let dim = local_dim.pow(num_sites as u32);
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: rho.nrows() });
        }
        validate_density_matrix(&rho)?;
        Ok(Self::from_parts(num_sites, local_dim, StateData::Mixed(rho), provenance))
    }

    pub(crate) fn from_parts(
        num_sites: usize,
        local_dim: usize,
        data: StateData,
        provenance: Provenance,
    ) -> Self {
        Self {
            num_sites,
            local_dim,
            data,
            provenance,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            StateData::Pure(v) => v.len(),
            StateData::Mixed(m) => m.nrows(),
        }
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Mixed(m) => m.clone(),
        }
    }

    /// `Tr(rho O)` for a full-space operator.
    pub fn expect_full(&self, op: &CMatrix) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.dotc(&(op * v)).re,
            StateData::Mixed(m) => linalg::trace(&(m * op)).re,
        }
    }

    /// Reduced state on `keep` (partial trace over the complement).
    pub fn reduce(&self, keep: &Region) -> Result<ReducedState> {
        if keep.sites().last().is_some_and(|&s| s >= self.num_sites) {
            return Err(Error::InvalidRegion(format!(
                "{:?} outside a {}-site state",
                keep.sites(),
                self.num_sites
            )));
        }
        let rho = match &self.data {
            StateData::Pure(v) => tensor::partial_trace_pure(v, self.num_sites, self.local_dim, keep.sites()),
            StateData::Mixed(m) => tensor::partial_trace(m, self.num_sites, self.local_dim, keep.sites()),
        };
        Ok(ReducedState {
            region: keep.clone(),
            local_dim: self.local_dim,
            rho: linalg::hermitian_part(&rho),
        })
    }

    /// `Tr(rho O_1 ... O_n)` for operators on pairwise disjoint supports.
    pub fn expect(&self, ops: &[&LocalOperator]) -> Result<f64> {
        check_disjoint_supports(ops)?;
        if ops.is_empty() {
            return Ok(1.0);
        }
        let union = Region::union(ops.iter().map(|o| o.support()))?;
        self.reduce(&union)?.expect(ops)
    }
}

/// Anything that can hand out reduced density matrices.
pub trait Reducible {
    fn local_dim(&self) -> usize;
    fn reduce_to(&self, keep: &Region) -> Result<ReducedState>;
}

impl Reducible for ManyBodyState {
    fn local_dim(&self) -> usize {
        self.local_dim
    }

    fn reduce_to(&self, keep: &Region) -> Result<ReducedState> {
        self.reduce(keep)
    }
}

impl Reducible for ReducedState {
    fn local_dim(&self) -> usize {
        self.local_dim
    }

    fn reduce_to(&self, keep: &Region) -> Result<ReducedState> {
        if keep == &self.region {
            return Ok(self.clone());
        }
        self.reduce(keep)
    }
}

pub(crate) fn validate_density_matrix(rho: &CMatrix) -> Result<()> {
    let deviation = linalg::hermitian_deviation(rho);
    if deviation > STATE_TOL {
        return Err(Error::InvalidState(format!("density matrix not Hermitian ({deviation:e})")));
    }
    let tr = linalg::trace(rho).re;
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let min = linalg::eigvalsh(rho).first().copied().unwrap_or(0.0);
    if min < -STATE_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// A density matrix on an explicit set of sites.
#[derive(Debug, Clone)]
pub struct ReducedState {
    region: Region,
    local_dim: usize,
    rho: CMatrix,
}

impl ReducedState {
    pub fn new(region: Region, local_dim: usize, rho: CMatrix) -> Result<Self> {
        let dim = local_dim.pow(region.size() as u32);
        if rho.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: rho.nrows() });
        }
        validate_density_matrix(&rho)?;
        Ok(Self { region, local_dim, rho })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    /// Further partial trace onto a subregion.
    pub fn reduce(&self, keep: &Region) -> Result<ReducedState> {
        let positions = keep.positions_in(self.region.sites())?;
        let rho = tensor::partial_trace(&self.rho, self.region.size(), self.local_dim, &positions);
        Ok(ReducedState {
            region: keep.clone(),
            local_dim: self.local_dim,
            rho,
        })
    }

    /// Full operator on this state's sites for an operator supported inside it.
    pub fn embed(&self, op: &LocalOperator) -> Result<CMatrix> {
        self.embed_matrix(op.matrix(), op.support())
    }

    pub fn embed_matrix(&self, matrix: &CMatrix, support: &Region) -> Result<CMatrix> {
        let positions = support.positions_in(self.region.sites())?;
        Ok(tensor::embed(matrix, self.region.size(), self.local_dim, &positions))
    }

    /// `Tr(rho O_1 ... O_n)`; supports must be disjoint and contained in the region.
    pub fn expect(&self, ops: &[&LocalOperator]) -> Result<f64> {
        check_disjoint_supports(ops)?;
        let dim = self.rho.nrows();
        let mut product = linalg::identity(dim);
        for op in ops {
            product *= self.embed(op)?;
        }
        Ok(linalg::trace(&(&self.rho * product)).re)
    }
}

/// `op ⊗ I` on the full lattice space.
pub fn embed(op: &LocalOperator, lattice: &Lattice) -> Result<CMatrix> {
    lattice.validate_region(op.support())?;
    if op.local_dim() != lattice.local_dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.local_dim(),
            got: op.local_dim(),
        });
    }
    lattice.check_dense()?;
    Ok(tensor::embed(
        op.matrix(),
        lattice.num_sites(),
        lattice.local_dim(),
        op.support().sites(),
    ))
}

pub fn reduce(state: &ManyBodyState, keep: &Region) -> Result<ReducedState> {
    state.reduce(keep)
}

pub fn expect(state: &ManyBodyState, ops: &[&LocalOperator]) -> Result<f64> {
    state.expect(ops)
}

/// Tensor product of one local density matrix per site. The result is pure
/// when every factor is pure.
pub fn product_state(lattice: &Lattice, locals: &[CMatrix]) -> Result<ManyBodyState> {
    let n = lattice.num_sites();
    let d = lattice.local_dim();
    if locals.len() != n {
        return Err(Error::SiteCountMismatch { expected: n, got: locals.len() });
    }
    let mut vectors = Vec::with_capacity(n);
    for rho in locals {
        if rho.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
        }
        validate_density_matrix(rho)?;
        let eig = linalg::eigh(rho);
        if (eig.values[d - 1] - 1.0).abs() <= STATE_TOL {
            vectors.push(eig.vectors.column(d - 1).into_owned());
        }
    }
    if vectors.len() == n {
        return product_state_pure(lattice, &vectors);
    }
    lattice.check_dense()?;
    let rho = locals
        .iter()
        .skip(1)
        .fold(locals[0].clone(), |acc, r| linalg::kron(&acc, r));
    Ok(ManyBodyState::from_parts(n, d, StateData::Mixed(rho), Provenance::Product))
}

pub fn product_state_pure(lattice: &Lattice, locals: &[CVector]) -> Result<ManyBodyState> {
    let n = lattice.num_sites();
    if locals.len() != n {
        return Err(Error::SiteCountMismatch { expected: n, got: locals.len() });
    }
    let mut psi = CVector::from_element(1, linalg::ONE);
    for v in locals {
        let norm = v.norm();
        if (norm - 1.0).abs() > STATE_TOL || v.len() != lattice.local_dim() {
            return Err(Error::InvalidState("local factor is not a unit vector".into()));
        }
        psi = psi.kronecker(v);
    }
    Ok(ManyBodyState::from_parts(
        n,
        lattice.local_dim(),
        StateData::Pure(psi),
        Provenance::Product,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec};
    use crate::linalg::{random_density_matrix, C64, ONE, ZERO};
    use crate::quantum::operator::Pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket0() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])
    }

    fn bell_phi_plus() -> ManyBodyState {
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        ManyBodyState::pure(2, 2, psi, Provenance::Custom).unwrap()
    }

    fn singlet() -> ManyBodyState {
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]);
        ManyBodyState::pure(2, 2, psi, Provenance::Custom).unwrap()
    }

    #[test]
    fn product_of_kets_is_pure_basis_state() {
        let l = build_lattice(LatticeSpec::chain(3)).unwrap();
        let st = product_state(&l, &[ket0(), ket0(), ket0()]).unwrap();
        assert!(st.is_pure());
        let rho = st.density_matrix();
        assert!((rho[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((linalg::trace(&rho).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_with_mixed_factor() {
        let l = build_lattice(LatticeSpec::chain(3)).unwrap();
        let mixed = linalg::identity(2).scale(0.5);
        let st = product_state(&l, &[ket0(), mixed.clone(), ket0()]).unwrap();
        assert!(!st.is_pure());
        assert!((linalg::trace(&st.density_matrix()).re - 1.0).abs() < 1e-14);
        let r = st.reduce(&Region::single(1)).unwrap();
        assert!((r.matrix() - mixed).norm() < 1e-14);
        assert!(matches!(
            product_state(&l, &[ket0(), ket0()]),
            Err(Error::SiteCountMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn bell_pair_marginal_is_maximally_mixed() {
        let r = bell_phi_plus().reduce(&Region::single(0)).unwrap();
        assert!((r.matrix() - linalg::identity(2).scale(0.5)).norm() < 1e-15);
    }

    #[test]
    fn zz_on_bell_states() {
        let z0 = LocalOperator::pauli(0, Pauli::Z);
        let z1 = LocalOperator::pauli(1, Pauli::Z);
        assert!((bell_phi_plus().expect(&[&z0, &z1]).unwrap() - 1.0).abs() < 1e-14);
        assert!((singlet().expect(&[&z0, &z1]).unwrap() + 1.0).abs() < 1e-14);
        assert!(matches!(
            singlet().expect(&[&z0, &z0]),
            Err(Error::OverlappingSupports)
        ));
    }

    #[test]
    fn maximally_mixed_traceless_expectation_vanishes() {
        let rho = linalg::identity(8).scale(1.0 / 8.0);
        let st = ManyBodyState::mixed(3, 2, rho, Provenance::Custom).unwrap();
        let x = LocalOperator::pauli(1, Pauli::X);
        assert!(st.expect(&[&x]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn embed_identity_and_ordering() {
        let l = build_lattice(LatticeSpec::chain(2)).unwrap();
        let id = LocalOperator::identity(Region::new(vec![0, 1]).unwrap(), 2);
        assert!((embed(&id, &l).unwrap() - linalg::identity(4)).norm() < 1e-15);
        let z1 = embed(&LocalOperator::pauli(1, Pauli::Z), &l).unwrap();
        assert!((z1 - linalg::kron(&linalg::identity(2), &Pauli::Z.matrix())).norm() < 1e-15);
    }

    #[test]
    fn embed_of_disjoint_product_matches_union() {
        let l = build_lattice(LatticeSpec::chain(6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ra = Region::new(vec![0, 3]).unwrap();
        let rb = Region::new(vec![1, 5]).unwrap();
        let a = LocalOperator::new(ra.clone(), linalg::random_hermitian(&mut rng, 4), 2).unwrap();
        let b = LocalOperator::new(rb.clone(), linalg::random_hermitian(&mut rng, 4), 2).unwrap();
        let union = Region::union([&ra, &rb]).unwrap();
        let ab_on_union = a.padded(&union).unwrap().matrix() * b.padded(&union).unwrap().matrix();
        let ab = LocalOperator::new(union, linalg::hermitian_part(&ab_on_union), 2).unwrap();
        let lhs = embed(&a, &l).unwrap() * embed(&b, &l).unwrap();
        assert!((lhs - embed(&ab, &l).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn padding_leaves_expectation_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density_matrix(&mut rng, 16);
        let st = ManyBodyState::mixed(4, 2, rho, Provenance::Custom).unwrap();
        let a = LocalOperator::new(Region::single(1), linalg::random_hermitian(&mut rng, 2), 2).unwrap();
        let padded = a.padded(&Region::new(vec![1, 2, 3]).unwrap()).unwrap();
        let e1 = st.expect(&[&a]).unwrap();
        let e2 = st.expect(&[&padded]).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn product_state_factorizes_expectations() {
        let l = build_lattice(LatticeSpec::chain(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let locals: Vec<CMatrix> = (0..4).map(|_| random_density_matrix(&mut rng, 2)).collect();
        let st = product_state(&l, &locals).unwrap();
        let a = LocalOperator::new(Region::new(vec![0, 1]).unwrap(), linalg::random_hermitian(&mut rng, 4), 2).unwrap();
        let b = LocalOperator::new(Region::single(3), linalg::random_hermitian(&mut rng, 2), 2).unwrap();
        let joint = st.expect(&[&a, &b]).unwrap();
        let sep = st.expect(&[&a]).unwrap() * st.expect(&[&b]).unwrap();
        assert!((joint - sep).abs() < 1e-10);
    }

    #[test]
    fn invalid_states_rejected() {
        let psi = CVector::from_element(4, ONE);
        assert!(ManyBodyState::pure(2, 2, psi, Provenance::Custom).is_err());
        let mut rho = linalg::identity(2).scale(0.5);
        rho[(0, 0)] = C64::new(1.5, 0.0);
        rho[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(ManyBodyState::mixed(1, 2, rho, Provenance::Custom).is_err());
    }
}
