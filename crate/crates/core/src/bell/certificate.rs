use serde::{Deserialize, Serialize};

use crate::clustering::{ClusteringFit, PropagationFit};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Region};
use crate::quantum::{ManyBodyState, Provenance};

use super::bounds::{general_bound, lemma1_epsilon, lemma2_bound, quench_epsilon, RegionLayout};
use super::inequality::{gamma_constant, BellInequality, InequalityForm};
use super::seesaw::{chsh_sup_seesaw, general_sup_seesaw, SeesawOptions};

/// Slack in `satisfied <=> value <= bound + SATISFIED_TOL`.
pub const SATISFIED_TOL: f64 = 1e-9;

/// Which envelope turns clustering constants into a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    /// CHSH, static clustering: `2 + 4 min(|X|,|Y|) C e^{-lambda r}`.
    ChshStatic,
    /// CHSH after a product-state quench: `2 + 4 |X||Y| C (e^{lambda v t} - 1) e^{-lambda r}`.
    ChshQuench,
    /// One- and two-body functional, static clustering.
    TwoBodyStatic,
    /// One- and two-body functional after a quench.
    TwoBodyQuench,
    /// Arbitrary correlators: `Delta_C + C |X| Gamma e^{-lambda r_min}`.
    GeneralStatic,
}

impl BoundFormula {
    pub fn is_quench(self) -> bool {
        matches!(self, Self::ChshQuench | Self::TwoBodyQuench)
    }

    /// Default formula for an inequality and fit type.
    pub fn select(ineq: &BellInequality, fit: &FitConstants) -> Self {
        let quench = matches!(fit, FitConstants::Propagation(_));
        match (ineq.is_chsh(), ineq.form(), quench) {
            (true, _, false) => Self::ChshStatic,
            (true, _, true) => Self::ChshQuench,
            (false, InequalityForm::TwoBody, false) => Self::TwoBodyStatic,
            (false, InequalityForm::TwoBody, true) => Self::TwoBodyQuench,
            (false, InequalityForm::General, _) => Self::GeneralStatic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitConstants {
    Clustering(ClusteringFit),
    Propagation(PropagationFit),
}

impl FitConstants {
    pub fn c(&self) -> f64 {
        match self {
            Self::Clustering(f) => f.c,
            Self::Propagation(f) => f.c,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Self::Clustering(f) => f.lambda,
            Self::Propagation(f) => f.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub c: f64,
    pub lambda: f64,
    pub v: Option<f64>,
    pub t: Option<f64>,
    pub region_sizes: Vec<usize>,
    /// Pairwise region distances `d(i, j)`, `i < j`, row-major.
    pub distances: Vec<f64>,
    pub gamma: Option<f64>,
    pub delta_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityCertificate {
    /// Largest functional value found by seesaw.
    pub value: f64,
    pub bound: f64,
    pub formula: BoundFormula,
    pub inputs: CertificateInputs,
    pub satisfied: bool,
    pub converged: bool,
    /// The clustering premise, kept so a failure can be traced to the fit.
    pub fit: FitConstants,
}

impl LocalityCertificate {
    pub fn margin(&self) -> f64 {
        self.bound - self.value
    }

    /// Whether `satisfied` agrees with the stored value and bound.
    pub fn is_consistent(&self) -> bool {
        self.satisfied == (self.value <= self.bound + SATISFIED_TOL)
    }
}

/// Optimizes the functional on `regions` and compares it with the bound
/// implied by `fit`. `formula` defaults to [`BoundFormula::select`].
pub fn certify(
    state: &ManyBodyState,
    ineq: &BellInequality,
    lattice: &Lattice,
    regions: &[Region],
    fit: &FitConstants,
    formula: Option<BoundFormula>,
    opts: &SeesawOptions,
) -> Result<LocalityCertificate> {
    let formula = formula.unwrap_or_else(|| BoundFormula::select(ineq, fit));
    let layout = RegionLayout::from_lattice(lattice, regions)?;
    if regions.len() != ineq.parties() {
        return Err(Error::ShapeMismatch(format!("{} regions for {} parties", regions.len(), ineq.parties())));
    }
    let quench = match (formula.is_quench(), fit, state.provenance()) {
        (true, FitConstants::Propagation(p), Provenance::Quench { t }) => Some((p.v, t)),
        (true, FitConstants::Propagation(_), other) => {
            return Err(Error::FormulaMismatch(format!("{formula:?} needs a quenched state, got {other:?}")))
        }
        (true, FitConstants::Clustering(_), _) => {
            return Err(Error::FormulaMismatch(format!("{formula:?} needs a propagation fit")))
        }
        (false, FitConstants::Clustering(_), _) => None,
        (false, FitConstants::Propagation(_), _) => {
            return Err(Error::FormulaMismatch(format!("{formula:?} needs a static clustering fit")))
        }
    };
    let chsh = matches!(formula, BoundFormula::ChshStatic | BoundFormula::ChshQuench);
    if chsh && !ineq.is_chsh() {
        return Err(Error::FormulaMismatch(format!("{formula:?} applies only to CHSH")));
    }
    if matches!(formula, BoundFormula::TwoBodyStatic | BoundFormula::TwoBodyQuench) && ineq.form() != InequalityForm::TwoBody {
        return Err(Error::FormulaMismatch("two-body formula for higher-order correlators".into()));
    }

    let (c, lambda) = (fit.c(), fit.lambda());
    let sizes = layout.sizes();
    let mut gamma = None;
    let bound = match formula {
        BoundFormula::ChshStatic => {
            ineq.delta_c() + lemma1_epsilon(sizes[0].min(sizes[1]), c, lambda, layout.distance(0, 1))
        }
        BoundFormula::ChshQuench => {
            let (v, t) = quench.expect("quench parameters");
            ineq.delta_c() + quench_epsilon(sizes[0], sizes[1], c, lambda, v, t, layout.distance(0, 1))
        }
        BoundFormula::TwoBodyStatic | BoundFormula::TwoBodyQuench => lemma2_bound(ineq, &layout, c, lambda, quench)?,
        BoundFormula::GeneralStatic => {
            let g = gamma_constant(ineq);
            gamma = Some(g);
            general_bound(ineq.delta_c(), c, lambda, layout.max_size(), g, layout.min_distance())
        }
    };

    let result = if chsh {
        chsh_sup_seesaw(state, &regions[0], &regions[1], opts)?
    } else {
        general_sup_seesaw(state, ineq, regions, opts)?
    };
    let value = result.value;
    Ok(LocalityCertificate {
        value,
        bound,
        formula,
        inputs: CertificateInputs {
            c,
            lambda,
            v: quench.map(|q| q.0),
            t: quench.map(|q| q.1),
            region_sizes: sizes.to_vec(),
            distances: layout.pair_distances(),
            gamma,
            delta_c: ineq.delta_c(),
        },
        satisfied: value <= bound + SATISFIED_TOL,
        converged: result.converged,
        fit: *fit,
    })
}
