use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{validate_disjoint, Region};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::quantum::operator::{check_disjoint_supports, LocalOperator};
use crate::quantum::Reducible;
use crate::tensor;

use super::inequality::{BellInequality, Correlator, InequalityForm};

/// One region per party and `M_i` norm-bounded operators on each.
#[derive(Debug, Clone)]
pub struct MeasurementAssignment {
    regions: Vec<Region>,
    operators: Vec<Vec<LocalOperator>>,
}

impl MeasurementAssignment {
    /// Operators supported inside their party's region are padded to it.
    pub fn new(regions: Vec<Region>, operators: Vec<Vec<LocalOperator>>) -> Result<Self> {
        if regions.len() != operators.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} regions for {} parties",
                regions.len(),
                operators.len()
            )));
        }
        if !validate_disjoint(&regions) {
            return Err(Error::OverlappingSupports);
        }
        let operators = regions
            .iter()
            .zip(operators)
            .map(|(region, ops)| {
                ops.into_iter()
                    .map(|op| {
                        op.check_measurement()?;
                        if op.support() == region {
                            Ok(op)
                        } else {
                            op.padded(region)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { regions, operators })
    }

    pub(crate) fn from_matrices(regions: &[Region], local_dim: usize, ops: Vec<Vec<CMatrix>>) -> Result<Self> {
        let operators = regions
            .iter()
            .zip(ops)
            .map(|(region, ms)| {
                ms.into_iter()
                    .map(|m| LocalOperator::new(region.clone(), linalg::hermitian_part(&m), local_dim))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(regions.to_vec(), operators)
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn operators(&self) -> &[Vec<LocalOperator>] {
        &self.operators
    }

    pub fn party(&self, i: usize) -> &[LocalOperator] {
        &self.operators[i]
    }

    pub(crate) fn matrices(&self) -> Vec<Vec<CMatrix>> {
        self.operators
            .iter()
            .map(|ops| ops.iter().map(|o| o.matrix().clone()).collect())
            .collect()
    }

    fn check_shape(&self, ineq: &BellInequality) -> Result<()> {
        if self.regions.len() != ineq.parties() {
            return Err(Error::ShapeMismatch(format!(
                "assignment has {} parties, inequality {}",
                self.regions.len(),
                ineq.parties()
            )));
        }
        for (i, (ops, &m)) in self.operators.iter().zip(ineq.settings()).enumerate() {
            if ops.len() != m {
                return Err(Error::ShapeMismatch(format!(
                    "party {i} has {} operators, inequality expects {m}",
                    ops.len()
                )));
            }
        }
        Ok(())
    }
}

/// `<A0 B0> + <A0 B1> + <A1 B0> - <A1 B1>`.
pub fn chsh_value<S: Reducible + ?Sized>(
    rho: &S,
    a0: &LocalOperator,
    a1: &LocalOperator,
    b0: &LocalOperator,
    b1: &LocalOperator,
) -> Result<f64> {
    for op in [a0, a1, b0, b1] {
        op.check_measurement()?;
    }
    for a in [a0, a1] {
        for b in [b0, b1] {
            check_disjoint_supports(&[a, b])?;
        }
    }
    let union = Region::union([a0.support(), a1.support(), b0.support(), b1.support()])?;
    let reduced = rho.reduce_to(&union)?;
    let e = |a: &LocalOperator, b: &LocalOperator| reduced.expect(&[a, b]);
    Ok(e(a0, b0)? + e(a0, b1)? + e(a1, b0)? - e(a1, b1)?)
}

/// `2 - 2 max(|<A0>|, |<A1>|)`: how far Alice's marginals sit from saturating.
pub fn delta_margin<S: Reducible + ?Sized>(rho: &S, a0: &LocalOperator, a1: &LocalOperator) -> Result<f64> {
    a0.check_measurement()?;
    a1.check_measurement()?;
    let m0 = rho.reduce_to(a0.support())?.expect(&[a0])?;
    let m1 = rho.reduce_to(a1.support())?.expect(&[a1])?;
    Ok(2.0 - 2.0 * m0.abs().max(m1.abs()))
}

/// One- and two-body functional value; rejects correlators of order three or more.
pub fn bell2_value<S: Reducible + ?Sized>(rho: &S, ineq: &BellInequality, meas: &MeasurementAssignment) -> Result<f64> {
    if ineq.form() != InequalityForm::TwoBody {
        return Err(Error::ShapeMismatch("inequality has correlators of order > 2".into()));
    }
    general_value(rho, ineq, meas)
}

/// Sum over every correlator of the inequality.
pub fn general_value<S: Reducible + ?Sized>(rho: &S, ineq: &BellInequality, meas: &MeasurementAssignment) -> Result<f64> {
    meas.check_shape(ineq)?;
    let engine = Engine::new(rho, &ineq.terms(), meas.regions())?;
    Ok(engine.value(&meas.matrices()))
}

/// A correlator with its reduced state and the positions of each party inside it.
struct PreparedTerm {
    coeff: f64,
    parties: Vec<usize>,
    settings: Vec<usize>,
    rho: usize,
    num_sites: usize,
    positions: Vec<Vec<usize>>,
}

/// Reduced states shared between correlators over the same parties.
pub(crate) struct Engine {
    local_dim: usize,
    dims: Vec<usize>,
    rhos: Vec<CMatrix>,
    terms: Vec<PreparedTerm>,
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

impl Engine {
    pub(crate) fn new<S: Reducible + ?Sized>(rho: &S, terms: &[Correlator], regions: &[Region]) -> Result<Self> {
        if !validate_disjoint(regions) {
            return Err(Error::OverlappingSupports);
        }
        let local_dim = rho.local_dim();
        let dims = regions.iter().map(|r| local_dim.pow(r.size() as u32)).collect();
        let mut cache: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut rhos = Vec::new();
        let mut prepared = Vec::with_capacity(terms.len());
        for t in terms.iter().filter(|t| t.coeff != 0.0) {
            if let Some(&p) = t.parties.iter().find(|&&p| p >= regions.len()) {
                return Err(Error::ShapeMismatch(format!("no region for party {p}")));
            }
            let mut key = t.parties.clone();
            key.sort_unstable();
            let union = Region::union(key.iter().map(|&p| &regions[p]))?;
            let idx = match cache.get(&key) {
                Some(&i) => i,
                None => {
                    rhos.push(rho.reduce_to(&union)?.into_matrix());
                    cache.insert(key, rhos.len() - 1);
                    rhos.len() - 1
                }
            };
            let positions = t
                .parties
                .iter()
                .map(|&p| regions[p].positions_in(union.sites()))
                .collect::<Result<Vec<_>>>()?;
            prepared.push(PreparedTerm {
                coeff: t.coeff,
                parties: t.parties.clone(),
                settings: t.settings.clone(),
                rho: idx,
                num_sites: union.size(),
                positions,
            });
        }
        Ok(Self { local_dim, dims, rhos, terms: prepared })
    }

    pub(crate) fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Product of the term's operators except (optionally) the one at `skip`.
    fn others(&self, term: &PreparedTerm, ops: &[Vec<CMatrix>], skip: Option<usize>) -> Option<CMatrix> {
        let mut product: Option<CMatrix> = None;
        for (idx, (&p, &k)) in term.parties.iter().zip(&term.settings).enumerate() {
            if Some(idx) == skip {
                continue;
            }
            let full = tensor::embed(&ops[p][k], term.num_sites, self.local_dim, &term.positions[idx]);
            product = Some(match product {
                None => full,
                Some(m) => m * full,
            });
        }
        product
    }

    pub(crate) fn term_value(&self, term_index: usize, ops: &[Vec<CMatrix>]) -> f64 {
        let term = &self.terms[term_index];
        let rho = &self.rhos[term.rho];
        let z = match self.others(term, ops, None) {
            Some(product) => trace_product(rho, &product),
            None => linalg::trace(rho),
        };
        term.coeff * z.re
    }

    pub(crate) fn value(&self, ops: &[Vec<CMatrix>]) -> f64 {
        (0..self.terms.len()).map(|i| self.term_value(i, ops)).sum()
    }

    /// Effective operands `K_k` for every setting of `party`, plus the value of
    /// the terms that do not involve it, so the functional equals
    /// `sum_k Tr(E_k K_k) + rest`.
    pub(crate) fn effective(&self, party: usize, settings: usize, ops: &[Vec<CMatrix>]) -> (Vec<CMatrix>, f64) {
        let dim = self.dims[party];
        let mut k_ops = vec![CMatrix::zeros(dim, dim); settings];
        let mut rest = 0.0;
        for (i, term) in self.terms.iter().enumerate() {
            let Some(idx) = term.parties.iter().position(|&p| p == party) else {
                rest += self.term_value(i, ops);
                continue;
            };
            let rho = &self.rhos[term.rho];
            let weighted = match self.others(term, ops, Some(idx)) {
                Some(product) => rho * product,
                None => rho.clone(),
            };
            let reduced = tensor::partial_trace(&weighted, term.num_sites, self.local_dim, &term.positions[idx]);
            k_ops[term.settings[idx]] += reduced.scale(term.coeff);
        }
        (k_ops.iter().map(linalg::hermitian_part).collect(), rest)
    }
}
