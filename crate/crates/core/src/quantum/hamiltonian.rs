use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Region};
use crate::linalg::{self, CMatrix, CVector, Eigh};
use crate::quantum::operator::{Pauli, HERMITIAN_TOL};
use crate::tensor;

/// Default cap on the interaction range.
pub const DEFAULT_MAX_RANGE: f64 = 2.0;

/// One interaction `h(X)`.
#[derive(Debug, Clone)]
pub struct Term {
    pub support: Region,
    pub matrix: CMatrix,
}

#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub terms: Vec<Term>,
    pub max_range: f64,
}

impl HamiltonianSpec {
    pub fn new(terms: Vec<Term>) -> Self {
        Self {
            terms,
            max_range: DEFAULT_MAX_RANGE,
        }
    }

    pub fn push(&mut self, support: Region, matrix: CMatrix) {
        self.terms.push(Term { support, matrix });
    }
}

/// Named nearest-neighbour spin-1/2 models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Model {
    /// `-J sum ZZ - g sum X`
    Tfim { j: f64, g: f64 },
    /// `J sum (XX + YY + delta ZZ) - h sum Z`
    Xxz { j: f64, delta: f64, h: f64 },
    /// `J sum (XX + YY + ZZ) - h sum Z`
    Heisenberg { j: f64, h: f64 },
}

impl Model {
    pub fn spec(&self, lattice: &Lattice) -> Result<HamiltonianSpec> {
        if lattice.local_dim() != 2 {
            return Err(Error::InvalidParameter(format!(
                "named models need local_dim 2, lattice has {}",
                lattice.local_dim()
            )));
        }
        let pp = |a: Pauli, b: Pauli| linalg::kron(&a.matrix(), &b.matrix());
        let (bond, field) = match *self {
            Model::Tfim { j, g } => (pp(Pauli::Z, Pauli::Z).scale(-j), Pauli::X.matrix().scale(-g)),
            Model::Xxz { j, delta, h } => (
                (pp(Pauli::X, Pauli::X) + pp(Pauli::Y, Pauli::Y) + pp(Pauli::Z, Pauli::Z).scale(delta)).scale(j),
                Pauli::Z.matrix().scale(-h),
            ),
            Model::Heisenberg { j, h } => (
                (pp(Pauli::X, Pauli::X) + pp(Pauli::Y, Pauli::Y) + pp(Pauli::Z, Pauli::Z)).scale(j),
                Pauli::Z.matrix().scale(-h),
            ),
        };
        let mut spec = HamiltonianSpec::new(Vec::new());
        for (a, b) in lattice.bonds() {
            spec.push(Region::new(vec![a, b])?, bond.clone());
        }
        if field.iter().any(|z| z.norm() > 0.0) {
            for site in 0..lattice.num_sites() {
                spec.push(Region::single(site), field.clone());
            }
        }
        Ok(spec)
    }
}

/// `H = sum_X h(X)` stored as a term list; densified on demand.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    num_sites: usize,
    local_dim: usize,
    dim: usize,
    dense_cap: usize,
    range: f64,
    terms: Vec<Term>,
    spectrum: OnceLock<Eigh>,
}

pub fn build_hamiltonian(lattice: &Lattice, spec: &HamiltonianSpec) -> Result<Hamiltonian> {
    let d = lattice.local_dim();
    let mut range = 0.0f64;
    for term in &spec.terms {
        lattice.validate_region(&term.support)?;
        let expected = d.pow(term.support.size() as u32);
        if term.matrix.nrows() != expected || term.matrix.ncols() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: term.matrix.nrows(),
            });
        }
        let deviation = linalg::hermitian_deviation(&term.matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        range = range.max(lattice.diameter(&term.support));
    }
    if range > spec.max_range {
        return Err(Error::RangeViolation {
            range,
            max: spec.max_range,
        });
    }
    Ok(Hamiltonian {
        num_sites: lattice.num_sites(),
        local_dim: d,
        dim: lattice.hilbert_dim(),
        dense_cap: lattice.caps().dense,
        range,
        terms: spec.terms.clone(),
        spectrum: OnceLock::new(),
    })
}

impl Hamiltonian {
    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interaction range `R`: largest term diameter.
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| linalg::is_real(&t.matrix))
    }

    pub(crate) fn check_dense(&self) -> Result<()> {
        if self.dim > self.dense_cap {
            return Err(Error::DimensionCapExceeded {
                dim: self.dim as u128,
                cap: self.dense_cap,
            });
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        self.check_dense()?;
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            h += tensor::embed(&t.matrix, self.num_sites, self.local_dim, t.support.sites());
        }
        Ok(linalg::hermitian_part(&h))
    }

    /// Matrix-free `H psi`.
    pub fn apply(&self, psi: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for t in &self.terms {
            tensor::apply_local_into(&t.matrix, self.num_sites, self.local_dim, t.support.sites(), psi, &mut out);
        }
        out
    }

    /// Full eigendecomposition, computed once per Hamiltonian value.
    pub fn spectrum(&self) -> Result<&Eigh> {
        if let Some(eig) = self.spectrum.get() {
            return Ok(eig);
        }
        let dense = self.to_dense()?;
        Ok(self.spectrum.get_or_init(|| linalg::eigh(&dense)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_site_minus_z() {
        let l = build_lattice(LatticeSpec::chain(1)).unwrap();
        let mut spec = HamiltonianSpec::new(vec![]);
        spec.push(Region::single(0), Pauli::Z.matrix().scale(-1.0));
        let h = build_hamiltonian(&l, &spec).unwrap().to_dense().unwrap();
        assert_eq!(h[(0, 0)].re, -1.0);
        assert_eq!(h[(1, 1)].re, 1.0);
        assert_eq!(h[(0, 1)].norm(), 0.0);
    }

    #[test]
    fn empty_terms_give_zero_operator() {
        let l = build_lattice(LatticeSpec::chain(3)).unwrap();
        let h = build_hamiltonian(&l, &HamiltonianSpec::new(vec![])).unwrap();
        assert_eq!(h.to_dense().unwrap().norm(), 0.0);
    }

    #[test]
    fn two_site_tfim_matches_explicit_kron_sum() {
        let l = build_lattice(LatticeSpec::chain(2)).unwrap();
        let h = build_hamiltonian(&l, &Model::Tfim { j: 1.0, g: 1.0 }.spec(&l).unwrap())
            .unwrap()
            .to_dense()
            .unwrap();
        let i2 = linalg::identity(2);
        let expected = -(linalg::kron(&Pauli::Z.matrix(), &Pauli::Z.matrix())
            + linalg::kron(&Pauli::X.matrix(), &i2)
            + linalg::kron(&i2, &Pauli::X.matrix()));
        assert!((h - expected).norm() < 1e-15);
    }

    #[test]
    fn range_and_hermiticity_enforced() {
        let l = build_lattice(LatticeSpec::chain(6)).unwrap();
        let zz = linalg::kron(&Pauli::Z.matrix(), &Pauli::Z.matrix());
        let mut spec = HamiltonianSpec::new(vec![]);
        spec.push(Region::new(vec![0, 3]).unwrap(), zz.clone());
        assert!(matches!(
            build_hamiltonian(&l, &spec),
            Err(Error::RangeViolation { .. })
        ));
        spec.max_range = 3.0;
        assert!(build_hamiltonian(&l, &spec).is_ok());

        let mut bad = linalg::identity(2);
        bad[(0, 1)] = linalg::ONE;
        let spec = HamiltonianSpec::new(vec![Term { support: Region::single(0), matrix: bad }]);
        assert!(matches!(build_hamiltonian(&l, &spec), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn dense_cap_enforced() {
        let caps = crate::lattice::DimensionCaps { dense: 8, pure: 1 << 10 };
        let l = build_lattice(LatticeSpec::chain(4).with_caps(caps)).unwrap();
        let h = build_hamiltonian(&l, &Model::Tfim { j: 1.0, g: 1.0 }.spec(&l).unwrap()).unwrap();
        assert!(matches!(h.to_dense(), Err(Error::DimensionCapExceeded { .. })));
    }

    #[test]
    fn matrix_free_apply_matches_dense() {
        let l = build_lattice(LatticeSpec::grid(2, 3)).unwrap();
        for model in [
            Model::Tfim { j: 1.0, g: 0.7 },
            Model::Xxz { j: 1.0, delta: 0.5, h: 0.3 },
            Model::Heisenberg { j: -0.8, h: 0.1 },
        ] {
            let h = build_hamiltonian(&l, &model.spec(&l).unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let psi = linalg::random_unit_vector(&mut rng, h.dim());
            let dense = h.to_dense().unwrap();
            assert!((h.apply(&psi) - &dense * &psi).norm() < 1e-12);
            assert!(linalg::is_hermitian(&dense, 1e-14));
        }
    }
}
