use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{region_distance, validate_disjoint, Lattice, Region};

use super::inequality::{BellInequality, InequalityForm};

/// Sizes of the party regions and their pairwise distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLayout {
    sizes: Vec<usize>,
    distances: Vec<Vec<f64>>,
}

impl RegionLayout {
    pub fn new(sizes: Vec<usize>, distances: Vec<Vec<f64>>) -> Result<Self> {
        let n = sizes.len();
        if distances.len() != n || distances.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch(format!("distance matrix must be {n}x{n}")));
        }
        for (i, row) in distances.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                if i != j && (d.is_nan() || d < 0.0 || d != distances[j][i]) {
                    return Err(Error::InvalidParameter(format!("distance ({i}, {j}) = {d}")));
                }
            }
        }
        Ok(Self { sizes, distances })
    }

    pub fn from_lattice(lattice: &Lattice, regions: &[Region]) -> Result<Self> {
        if !validate_disjoint(regions) {
            return Err(Error::OverlappingSupports);
        }
        let n = regions.len();
        let mut distances = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = region_distance(lattice, &regions[i], &regions[j])?;
                distances[i][j] = d;
                distances[j][i] = d;
            }
        }
        Self::new(regions.iter().map(Region::size).collect(), distances)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i][j]
    }

    /// Distances `d(i, j)` for `i < j`, row-major.
    pub fn pair_distances(&self) -> Vec<f64> {
        let n = self.sizes.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.distances[i][j])
            .collect()
    }

    /// Smallest pairwise distance (infinite for a single region).
    pub fn min_distance(&self) -> f64 {
        self.pair_distances().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

/// CHSH excess allowed by a static clustering envelope: `4 |X| C e^{-lambda r}`.
pub fn lemma1_epsilon(size_x: usize, c: f64, lambda: f64, r: f64) -> f64 {
    4.0 * size_x as f64 * c * (-lambda * r).exp()
}

/// Distance beyond which the static CHSH excess is at most `delta`:
/// `max(0, ln(4 |X| C / delta) / lambda)`.
pub fn r_star(size_x: usize, c: f64, lambda: f64, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::ZeroMargin(delta));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::ZeroDecay(lambda));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidParameter(format!("C = {c}")));
    }
    Ok(((4.0 * size_x as f64 * c / delta).ln() / lambda).max(0.0))
}

/// CHSH excess after a quench from a product state:
/// `4 |X||Y| C (e^{lambda v t} - 1) e^{-lambda r}`.
pub fn quench_epsilon(size_x: usize, size_y: usize, c: f64, lambda: f64, v: f64, t: f64, r: f64) -> f64 {
    4.0 * (size_x * size_y) as f64 * c * (lambda * v * t).exp_m1() * (-lambda * r).exp()
}

/// `Delta_C + C sum |beta_kl^{(ij)}| w_ij e^{-lambda r_ij}` over the stored
/// (ordered) two-party correlators, with `w_ij = min(|X_i|, |X_j|)`; the quench
/// variant uses `w_ij = |X_i||X_j|` and the factor `e^{lambda v t} - 1`.
pub fn lemma2_bound(
    ineq: &BellInequality,
    layout: &RegionLayout,
    c: f64,
    lambda: f64,
    quench: Option<(f64, f64)>,
) -> Result<f64> {
    if ineq.form() != InequalityForm::TwoBody {
        return Err(Error::FormulaMismatch("two-body bound requested for an inequality with higher-order correlators".into()));
    }
    if layout.sizes().len() != ineq.parties() {
        return Err(Error::ShapeMismatch(format!(
            "{} regions for {} parties",
            layout.sizes().len(),
            ineq.parties()
        )));
    }
    let growth = match quench {
        Some((v, t)) => (lambda * v * t).exp_m1(),
        None => 1.0,
    };
    let sum: f64 = ineq
        .terms()
        .iter()
        .filter(|term| term.order() == 2)
        .map(|term| {
            let (i, j) = (term.parties[0], term.parties[1]);
            let (si, sj) = (layout.sizes()[i], layout.sizes()[j]);
            let weight = if quench.is_some() { (si * sj) as f64 } else { si.min(sj) as f64 };
            weight * term.coeff.abs() * (-lambda * layout.distance(i, j)).exp()
        })
        .sum();
    Ok(ineq.delta_c() + c * growth * sum)
}

/// `Delta_C + C |X| Gamma e^{-lambda r_min}` with `|X|` the largest region.
///
/// The telescoping step applies clustering to a product of operators whose
/// support is a union of regions; using the largest single region (rather
/// than the union size) follows the statement of the bound, not its proof.
pub fn general_bound(delta_c: f64, c: f64, lambda: f64, max_region_size: usize, gamma: f64, r_min: f64) -> f64 {
    delta_c + c * max_region_size as f64 * gamma * (-lambda * r_min).exp()
}
