use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `sum_i M_i` for which deterministic strategies are enumerated.
pub const MAX_ENUMERATED_SETTINGS: usize = 20;

/// Tolerance for a declared local bound against the enumerated one.
pub const LOCAL_BOUND_TOL: f64 = 1e-9;

/// `alpha_k^{(i)}`: coefficient of `<E_k^{(i)}>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneBody {
    pub party: usize,
    pub setting: usize,
    pub coeff: f64,
}

/// `beta_kl^{(ij)}`: coefficient of `<E_k^{(i)} E_l^{(j)}>`. Pairs are ordered,
/// so `(i, j)` and `(j, i)` are distinct entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBody {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub coeff: f64,
}

/// A correlator `coeff <E_{k_1}^{(i_1)} ... E_{k_n}^{(i_n)}>` over distinct parties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlator {
    pub parties: Vec<usize>,
    pub settings: Vec<usize>,
    pub coeff: f64,
}

impl Correlator {
    pub fn order(&self) -> usize {
        self.parties.len()
    }

    /// Party/setting pairs sorted by party.
    fn canonical(&self) -> Vec<(usize, usize)> {
        let mut key: Vec<(usize, usize)> = self.parties.iter().copied().zip(self.settings.iter().copied()).collect();
        key.sort_unstable();
        key
    }
}

/// Whether every correlator involves at most two parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityForm {
    TwoBody,
    General,
}

/// A Bell functional `sum gamma <E...E>` with its classical local bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellInequality {
    parties: usize,
    settings: Vec<usize>,
    alpha: Vec<OneBody>,
    beta: Vec<TwoBody>,
    gamma: Vec<Correlator>,
    delta_c: f64,
}

impl BellInequality {
    /// Validates indices and computes or cross-checks the local bound.
    ///
    /// A declared `delta_c` is compared against enumeration whenever the
    /// strategy count is feasible; without a declaration enumeration must be
    /// feasible.
    pub fn new(
        settings: Vec<usize>,
        alpha: Vec<OneBody>,
        beta: Vec<TwoBody>,
        gamma: Vec<Correlator>,
        delta_c: Option<f64>,
    ) -> Result<Self> {
        let mut ineq = Self {
            parties: settings.len(),
            settings,
            alpha,
            beta,
            gamma,
            delta_c: 0.0,
        };
        ineq.validate()?;
        let enumerable = ineq.total_settings() <= MAX_ENUMERATED_SETTINGS;
        ineq.delta_c = match (delta_c, enumerable) {
            (Some(d), true) => {
                let computed = local_bound_bruteforce(&ineq)?.value;
                if (d - computed).abs() > LOCAL_BOUND_TOL {
                    return Err(Error::LocalBoundMismatch { declared: d, computed });
                }
                d
            }
            (Some(d), false) => {
                if !d.is_finite() {
                    return Err(Error::InvalidParameter(format!("delta_c = {d}")));
                }
                d
            }
            (None, _) => local_bound_bruteforce(&ineq)?.value,
        };
        Ok(ineq)
    }

    /// `<A0 B0> + <A0 B1> + <A1 B0> - <A1 B1>` as two-body coefficients.
    pub fn chsh() -> Self {
        let beta = [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)]
            .into_iter()
            .map(|(k, l, coeff)| TwoBody { i: 0, j: 1, k, l, coeff })
            .collect();
        Self {
            parties: 2,
            settings: vec![2, 2],
            alpha: Vec::new(),
            beta,
            gamma: Vec::new(),
            delta_c: 2.0,
        }
    }

    /// CHSH written as four general two-party correlators.
    pub fn chsh_correlators() -> Self {
        let gamma = Self::chsh().terms();
        Self {
            parties: 2,
            settings: vec![2, 2],
            alpha: Vec::new(),
            beta: Vec::new(),
            gamma,
            delta_c: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.parties == 0 {
            return Err(Error::ShapeMismatch("an inequality needs at least one party".into()));
        }
        if let Some(i) = self.settings.iter().position(|&m| m == 0) {
            return Err(Error::ShapeMismatch(format!("party {i} has no settings")));
        }
        let check = |party: usize, setting: usize| -> Result<()> {
            if party >= self.parties {
                return Err(Error::ShapeMismatch(format!("party {party} out of range ({} parties)", self.parties)));
            }
            if setting >= self.settings[party] {
                return Err(Error::ShapeMismatch(format!(
                    "setting {setting} out of range for party {party} ({} settings)",
                    self.settings[party]
                )));
            }
            Ok(())
        };
        let finite = |c: f64| -> Result<()> {
            if c.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("coefficient {c}")))
            }
        };
        for a in &self.alpha {
            check(a.party, a.setting)?;
            finite(a.coeff)?;
        }
        for b in &self.beta {
            check(b.i, b.k)?;
            check(b.j, b.l)?;
            finite(b.coeff)?;
            if b.i == b.j {
                return Err(Error::ShapeMismatch(format!("two-body term repeats party {}", b.i)));
            }
        }
        for g in &self.gamma {
            finite(g.coeff)?;
            if g.parties.is_empty() || g.parties.len() != g.settings.len() {
                return Err(Error::ShapeMismatch(format!(
                    "correlator with {} parties and {} settings",
                    g.parties.len(),
                    g.settings.len()
                )));
            }
            for (&p, &k) in g.parties.iter().zip(&g.settings) {
                check(p, k)?;
            }
            let mut sorted = g.parties.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != g.parties.len() {
                return Err(Error::ShapeMismatch(format!("correlator repeats a party: {:?}", g.parties)));
            }
        }
        Ok(())
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn settings(&self) -> &[usize] {
        &self.settings
    }

    pub fn alpha(&self) -> &[OneBody] {
        &self.alpha
    }

    pub fn beta(&self) -> &[TwoBody] {
        &self.beta
    }

    pub fn gamma(&self) -> &[Correlator] {
        &self.gamma
    }

    pub fn delta_c(&self) -> f64 {
        self.delta_c
    }

    pub fn total_settings(&self) -> usize {
        self.settings.iter().sum()
    }

    /// Every coefficient as a correlator, in alpha, beta, gamma order.
    pub fn terms(&self) -> Vec<Correlator> {
        let one = self.alpha.iter().map(|a| Correlator {
            parties: vec![a.party],
            settings: vec![a.setting],
            coeff: a.coeff,
        });
        let two = self.beta.iter().map(|b| Correlator {
            parties: vec![b.i, b.j],
            settings: vec![b.k, b.l],
            coeff: b.coeff,
        });
        one.chain(two).chain(self.gamma.iter().cloned()).collect()
    }

    pub fn form(&self) -> InequalityForm {
        if self.gamma.iter().all(|g| g.order() <= 2) {
            InequalityForm::TwoBody
        } else {
            InequalityForm::General
        }
    }

    /// True when the functional is CHSH after merging equal correlators.
    pub fn is_chsh(&self) -> bool {
        if self.settings != [2, 2] || self.delta_c != 2.0 {
            return false;
        }
        let merge = |terms: Vec<Correlator>| {
            let mut map: BTreeMap<Vec<(usize, usize)>, f64> = BTreeMap::new();
            for t in terms {
                *map.entry(t.canonical()).or_default() += t.coeff;
            }
            map.retain(|_, c| *c != 0.0);
            map
        };
        merge(self.terms()) == merge(Self::chsh().terms())
    }

    /// Functional value with each `<...>` replaced by the product of `values[i][k]`.
    pub fn evaluate_deterministic(&self, values: &[Vec<f64>]) -> f64 {
        self.terms()
            .iter()
            .map(|t| {
                t.coeff
                    * t.parties
                        .iter()
                        .zip(&t.settings)
                        .map(|(&p, &k)| values[p][k])
                        .product::<f64>()
            })
            .sum()
    }
}

/// `sum (n - 1) |gamma|` over all correlators.
pub fn gamma_constant(ineq: &BellInequality) -> f64 {
    ineq.terms()
        .iter()
        .map(|t| (t.order() as f64 - 1.0) * t.coeff.abs())
        .sum()
}

/// Best deterministic `+-1` strategy and its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBound {
    pub value: f64,
    /// `strategy[i][k]` is the outcome assigned to setting `k` of party `i`.
    pub strategy: Vec<Vec<i8>>,
}

/// Maximum of the functional over all deterministic `+-1` assignments.
///
/// Ties resolve to the lowest strategy index, where bit `offset(i) + k` set
/// means outcome `-1` for setting `k` of party `i`.
pub fn local_bound_bruteforce(ineq: &BellInequality) -> Result<LocalBound> {
    let total = ineq.total_settings();
    if total > MAX_ENUMERATED_SETTINGS {
        return Err(Error::TooManyStrategies { count: 1u128 << total.min(127) });
    }
    let mut offsets = Vec::with_capacity(ineq.parties);
    let mut acc = 0;
    for &m in &ineq.settings {
        offsets.push(acc);
        acc += m;
    }
    // Each term as (coefficient, bitmask of the settings it multiplies).
    let terms: Vec<(f64, u32)> = ineq
        .terms()
        .iter()
        .map(|t| {
            let mask = t
                .parties
                .iter()
                .zip(&t.settings)
                .fold(0u32, |m, (&p, &k)| m | (1 << (offsets[p] + k)));
            (t.coeff, mask)
        })
        .collect();
    let value_of = |strategy: u32| -> f64 {
        terms
            .iter()
            .map(|&(c, mask)| if (strategy & mask).count_ones().is_multiple_of(2) { c } else { -c })
            .sum()
    };
    let (value, best) = (0u32..(1u32 << total))
        .into_par_iter()
        .map(|s| (value_of(s), s))
        .reduce(
            || (f64::NEG_INFINITY, u32::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let strategy = ineq
        .settings
        .iter()
        .zip(&offsets)
        .map(|(&m, &off)| (0..m).map(|k| if best >> (off + k) & 1 == 1 { -1 } else { 1 }).collect())
        .collect();
    Ok(LocalBound { value, strategy })
}
