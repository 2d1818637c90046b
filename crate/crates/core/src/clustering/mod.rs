//! Connected correlators, multi-body correlation gaps, and envelope fits.

mod fit;

pub use fit::{
    fit_clustering, fit_propagation, ClusteringFit, PropagationFit, PropagationFitOptions,
    NUMERIC_FLOOR,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{region_distance, Lattice, Region};
use crate::linalg::{self, CMatrix};
use crate::quantum::operator::{check_disjoint_supports, LocalOperator, Pauli};
use crate::quantum::{ManyBodyState, ReducedState};

/// One connected-correlator measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSample {
    pub r: f64,
    pub t: f64,
    pub x: Region,
    pub y: Region,
    pub op_a: String,
    pub op_b: String,
    pub value: f64,
}

impl CorrelationSample {
    pub fn size_x(&self) -> usize {
        self.x.size()
    }

    pub fn size_y(&self) -> usize {
        self.y.size()
    }

    pub fn min_size(&self) -> usize {
        self.size_x().min(self.size_y())
    }
}

/// `<AB> - <A><B>` on a reduced state that contains both supports.
pub fn connected_correlator_reduced(rho: &ReducedState, a: &LocalOperator, b: &LocalOperator) -> Result<f64> {
    check_disjoint_supports(&[a, b])?;
    Ok(rho.expect(&[a, b])? - rho.expect(&[a])? * rho.expect(&[b])?)
}

pub fn connected_correlator(state: &ManyBodyState, a: &LocalOperator, b: &LocalOperator) -> Result<f64> {
    check_disjoint_supports(&[a, b])?;
    let union = Region::union([a.support(), b.support()])?;
    connected_correlator_reduced(&state.reduce(&union)?, a, b)
}

fn check_multibody(ops: &[&LocalOperator]) -> Result<()> {
    if ops.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "multi-body gap needs at least two operators, got {}",
            ops.len()
        )));
    }
    check_disjoint_supports(ops)?;
    ops.iter().try_for_each(|o| o.check_measurement())
}

/// `|<E1...En> - <E1>...<En>|`.
pub fn multibody_gap(state: &ManyBodyState, ops: &[&LocalOperator]) -> Result<f64> {
    check_multibody(ops)?;
    let union = Region::union(ops.iter().map(|o| o.support()))?;
    let rho = state.reduce(&union)?;
    let joint = rho.expect(ops)?;
    let mut product = 1.0;
    for op in ops {
        product *= rho.expect(&[op])?;
    }
    Ok((joint - product).abs())
}

/// The `n - 1` terms `|<E1...Ek> - <E1...E(k-1)><Ek>|`, `k = 2..n`.
pub fn telescoping_terms(state: &ManyBodyState, ops: &[&LocalOperator]) -> Result<Vec<f64>> {
    check_multibody(ops)?;
    let union = Region::union(ops.iter().map(|o| o.support()))?;
    let rho = state.reduce(&union)?;
    let mut prefix = rho.expect(&ops[..1])?;
    let mut terms = Vec::with_capacity(ops.len() - 1);
    for k in 1..ops.len() {
        let extended = rho.expect(&ops[..=k])?;
        let last = rho.expect(&ops[k..=k])?;
        terms.push((extended - prefix * last).abs());
        prefix = extended;
    }
    Ok(terms)
}

/// Sum of [`telescoping_terms`]; an upper bound on [`multibody_gap`].
pub fn telescoping_bound(state: &ManyBodyState, ops: &[&LocalOperator]) -> Result<f64> {
    Ok(telescoping_terms(state, ops)?.iter().sum())
}

/// Labelled single-site Hermitian operators used for clustering scans.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    local_dim: usize,
    ops: Vec<(String, CMatrix)>,
}

impl OperatorBasis {
    pub fn pauli() -> Self {
        Self {
            local_dim: 2,
            ops: Pauli::ALL.iter().map(|p| (p.label().to_string(), p.matrix())).collect(),
        }
    }

    pub fn custom(local_dim: usize, ops: Vec<(String, CMatrix)>) -> Result<Self> {
        for (label, m) in &ops {
            if m.nrows() != local_dim || !linalg::is_hermitian(m, crate::quantum::operator::HERMITIAN_TOL) {
                return Err(Error::ShapeMismatch(format!(
                    "basis operator {label} is not a Hermitian {local_dim}x{local_dim} matrix"
                )));
            }
        }
        Ok(Self { local_dim, ops })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// All tensor products of basis elements over the sites of `region`.
    pub fn operators_on(&self, region: &Region) -> Result<Vec<(String, LocalOperator)>> {
        let mut acc: Vec<(String, CMatrix)> = vec![(String::new(), linalg::identity(1))];
        for _ in region.sites() {
            acc = acc
                .iter()
                .flat_map(|(la, ma)| {
                    self.ops
                        .iter()
                        .map(move |(lb, mb)| (format!("{la}{lb}"), linalg::kron(ma, mb)))
                })
                .collect();
        }
        acc.into_iter()
            .map(|(label, m)| Ok((label, LocalOperator::new(region.clone(), m, self.local_dim)?)))
            .collect()
    }
}

/// Every unordered pair of distinct single sites.
pub fn singleton_pairs(lattice: &Lattice) -> Vec<(Region, Region)> {
    let n = lattice.num_sites();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (Region::single(i), Region::single(j))))
        .collect()
}

/// Connected correlators for every region pair and every basis operator pair.
pub fn scan_correlations(
    state: &ManyBodyState,
    lattice: &Lattice,
    pairs: &[(Region, Region)],
    basis: &OperatorBasis,
    t: f64,
) -> Result<Vec<CorrelationSample>> {
    if basis.local_dim() != lattice.local_dim() {
        return Err(Error::ShapeMismatch(format!(
            "basis local dimension {} vs lattice {}",
            basis.local_dim(),
            lattice.local_dim()
        )));
    }
    let per_pair: Vec<Result<Vec<CorrelationSample>>> = pairs
        .par_iter()
        .map(|(x, y)| {
            if x.intersects(y) {
                return Err(Error::OverlappingSupports);
            }
            let r = region_distance(lattice, x, y)?;
            let rho = state.reduce(&Region::union([x, y])?)?;
            let ops_x = basis.operators_on(x)?;
            let ops_y = basis.operators_on(y)?;
            let mut out = Vec::with_capacity(ops_x.len() * ops_y.len());
            for (la, a) in &ops_x {
                for (lb, b) in &ops_y {
                    out.push(CorrelationSample {
                        r,
                        t,
                        x: x.clone(),
                        y: y.clone(),
                        op_a: la.clone(),
                        op_b: lb.clone(),
                        value: connected_correlator_reduced(&rho, a, b)?,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut samples = Vec::new();
    for chunk in per_pair {
        samples.extend(chunk?);
    }
    Ok(samples)
}
