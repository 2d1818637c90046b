//! Lattice geometry, regions and distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Chain { length: usize },
    Grid { width: usize, height: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Graph,
    Euclidean,
    Chebyshev,
}

/// Upper limits on the full Hilbert-space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionCaps {
    /// Limit for workflows that materialize dense `D x D` operators.
    pub dense: usize,
    /// Limit for pure-state-only workflows.
    pub pure: usize,
}

impl Default for DimensionCaps {
    fn default() -> Self {
        Self {
            dense: 1 << 14,
            pure: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub geometry: Geometry,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default = "default_local_dim")]
    pub local_dim: usize,
    #[serde(default)]
    pub caps: DimensionCaps,
}

fn default_local_dim() -> usize {
    2
}

impl LatticeSpec {
    pub fn chain(length: usize) -> Self {
        Self {
            geometry: Geometry::Chain { length },
            boundary: Boundary::Open,
            metric: Metric::Graph,
            local_dim: 2,
            caps: DimensionCaps::default(),
        }
    }

    pub fn grid(width: usize, height: usize) -> Self {
        Self {
            geometry: Geometry::Grid { width, height },
            ..Self::chain(1)
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_local_dim(mut self, local_dim: usize) -> Self {
        self.local_dim = local_dim;
        self
    }

    pub fn with_caps(mut self, caps: DimensionCaps) -> Self {
        self.caps = caps;
        self
    }
}

/// A finite set of sites with integer coordinates and precomputed distances.
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    width: usize,
    height: usize,
    coords: Vec<(usize, usize)>,
    distances: Vec<f64>,
    hilbert_dim: usize,
}

pub fn build_lattice(spec: LatticeSpec) -> Result<Lattice> {
    let (width, height) = match spec.geometry {
        Geometry::Chain { length } => (length, 1),
        Geometry::Grid { width, height } => (width, height),
    };
    if width == 0 || height == 0 {
        return Err(Error::InvalidGeometry(format!(
            "lattice extent must be positive, got {width}x{height}"
        )));
    }
    if spec.local_dim < 2 {
        return Err(Error::InvalidGeometry(format!(
            "local dimension must be at least 2, got {}",
            spec.local_dim
        )));
    }
    let n = width * height;
    let dim = (spec.local_dim as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > spec.caps.pure as u128 {
        return Err(Error::DimensionCapExceeded {
            dim,
            cap: spec.caps.pure,
        });
    }
    let coords: Vec<(usize, usize)> = (0..n).map(|id| (id % width, id / width)).collect();
    let axis = |a: usize, b: usize, extent: usize| -> f64 {
        let direct = a.abs_diff(b);
        let steps = match spec.boundary {
            Boundary::Open => direct,
            Boundary::Periodic => direct.min(extent - direct),
        };
        steps as f64
    };
    let mut distances = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let dx = axis(coords[i].0, coords[j].0, width);
            let dy = axis(coords[i].1, coords[j].1, height);
            distances[i * n + j] = match spec.metric {
                Metric::Graph => dx + dy,
                Metric::Euclidean => dx.hypot(dy),
                Metric::Chebyshev => dx.max(dy),
            };
        }
    }
    Ok(Lattice {
        spec,
        width,
        height,
        coords,
        distances,
        hilbert_dim: dim as usize,
    })
}

impl Lattice {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn num_sites(&self) -> usize {
        self.coords.len()
    }

    pub fn local_dim(&self) -> usize {
        self.spec.local_dim
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn caps(&self) -> DimensionCaps {
        self.spec.caps
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        self.coords[site]
    }

    pub fn site_at(&self, x: usize, y: usize) -> Option<usize> {
        (x < self.width && y < self.height).then(|| y * self.width + x)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.distances[a * self.num_sites() + b]
    }

    /// Fails with `DimensionCapExceeded` when dense `D x D` storage is over the cap.
    pub fn check_dense(&self) -> Result<()> {
        if self.hilbert_dim > self.spec.caps.dense {
            return Err(Error::DimensionCapExceeded {
                dim: self.hilbert_dim as u128,
                cap: self.spec.caps.dense,
            });
        }
        Ok(())
    }

    /// Nearest-neighbour bonds: unordered pairs at unit graph distance.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.num_sites();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (xi, yi) = self.coords[i];
                let (xj, yj) = self.coords[j];
                let wrap = |a: usize, b: usize, extent: usize| {
                    let d = a.abs_diff(b);
                    match self.spec.boundary {
                        Boundary::Open => d,
                        Boundary::Periodic => d.min(extent - d),
                    }
                };
                if wrap(xi, xj, self.width) + wrap(yi, yj, self.height) == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn validate_region(&self, region: &Region) -> Result<()> {
        match region.sites().last() {
            Some(&last) if last < self.num_sites() => Ok(()),
            Some(&last) => Err(Error::InvalidRegion(format!(
                "site {last} outside lattice of {} sites",
                self.num_sites()
            ))),
            None => Err(Error::InvalidRegion("empty region".into())),
        }
    }

    /// Largest pairwise distance inside `region`.
    pub fn diameter(&self, region: &Region) -> f64 {
        let s = region.sites();
        let mut best = 0.0f64;
        for (k, &a) in s.iter().enumerate() {
            for &b in &s[k + 1..] {
                best = best.max(self.distance(a, b));
            }
        }
        best
    }
}

/// A nonempty set of site ids, stored strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(mut sites: Vec<usize>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidRegion("empty region".into()));
        }
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRegion(format!("repeated site in {sites:?}")));
        }
        Ok(Self(sites))
    }

    pub fn single(site: usize) -> Self {
        Self(vec![site])
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.0.iter().any(|&s| other.contains(s))
    }

    pub fn union<'a, I>(regions: I) -> Result<Region>
    where
        I: IntoIterator<Item = &'a Region>,
    {
        let mut all: Vec<usize> = regions.into_iter().flat_map(|r| r.0.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        Region::new(all)
    }

    /// Positions of this region's sites inside the sorted `outer` site list.
    pub fn positions_in(&self, outer: &[usize]) -> Result<Vec<usize>> {
        self.0
            .iter()
            .map(|s| {
                outer.binary_search(s).map_err(|_| {
                    Error::InvalidRegion(format!("site {s} not contained in {outer:?}"))
                })
            })
            .collect()
    }
}

impl TryFrom<Vec<usize>> for Region {
    type Error = Error;

    fn try_from(sites: Vec<usize>) -> Result<Self> {
        Region::new(sites)
    }
}

impl From<Region> for Vec<usize> {
    fn from(r: Region) -> Self {
        r.0
    }
}

/// Minimum over pairs `x in X`, `y in Y` of `d(x, y)`.
pub fn region_distance(lattice: &Lattice, x: &Region, y: &Region) -> Result<f64> {
    lattice.validate_region(x)?;
    lattice.validate_region(y)?;
    let mut best = f64::INFINITY;
    for &a in x.sites() {
        for &b in y.sites() {
            best = best.min(lattice.distance(a, b));
        }
    }
    Ok(best)
}

/// True iff no two regions share a site.
pub fn validate_disjoint(regions: &[Region]) -> bool {
    regions
        .iter()
        .enumerate()
        .all(|(i, a)| regions[i + 1..].iter().all(|b| !a.intersects(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn region(s: &[usize]) -> Region {
        Region::new(s.to_vec()).unwrap()
    }

    #[test]
    fn chain_distances() {
        let open = build_lattice(LatticeSpec::chain(4)).unwrap();
        assert_eq!(open.distance(0, 3), 3.0);
        let ring = build_lattice(LatticeSpec::chain(4).with_boundary(Boundary::Periodic)).unwrap();
        assert_eq!(ring.distance(0, 3), 1.0);
    }

    #[test]
    fn grid_euclidean_diagonal() {
        let g = build_lattice(LatticeSpec::grid(3, 3).with_metric(Metric::Euclidean)).unwrap();
        let a = g.site_at(0, 0).unwrap();
        let b = g.site_at(2, 2).unwrap();
        assert!((g.distance(a, b) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        let c = build_lattice(LatticeSpec::grid(3, 3).with_metric(Metric::Chebyshev)).unwrap();
        assert_eq!(c.distance(a, b), 2.0);
    }

    #[test]
    fn region_distance_examples() {
        let l = build_lattice(LatticeSpec::chain(10)).unwrap();
        assert_eq!(region_distance(&l, &region(&[0]), &region(&[7])).unwrap(), 7.0);
        assert_eq!(
            region_distance(&l, &region(&[0, 1]), &region(&[5, 9])).unwrap(),
            4.0
        );
        let x = region(&[2, 3]);
        assert_eq!(region_distance(&l, &x, &x).unwrap(), 0.0);
        assert!(matches!(
            region_distance(&l, &region(&[0]), &region(&[10])),
            Err(Error::InvalidRegion(_))
        ));
    }

    #[test]
    fn disjointness() {
        assert!(validate_disjoint(&[region(&[0]), region(&[1])]));
        assert!(!validate_disjoint(&[region(&[0, 1]), region(&[1, 2])]));
        assert!(validate_disjoint(&[]));
    }

    #[test]
    fn rejects_bad_geometry_and_caps() {
        assert!(matches!(
            build_lattice(LatticeSpec::chain(0)),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            build_lattice(LatticeSpec::chain(3).with_local_dim(1)),
            Err(Error::InvalidGeometry(_))
        ));
        let tight = DimensionCaps { dense: 4, pure: 8 };
        assert!(matches!(
            build_lattice(LatticeSpec::chain(4).with_caps(tight)),
            Err(Error::DimensionCapExceeded { dim: 16, cap: 8 })
        ));
        let l = build_lattice(LatticeSpec::chain(3).with_caps(tight)).unwrap();
        assert!(l.check_dense().is_err());
    }

    #[test]
    fn region_rejects_empty_and_duplicates() {
        assert!(Region::new(vec![]).is_err());
        assert!(Region::new(vec![1, 1]).is_err());
        assert_eq!(Region::new(vec![3, 1]).unwrap().sites(), &[1, 3]);
    }

    #[test]
    fn bonds_of_ring_and_grid() {
        let ring = build_lattice(LatticeSpec::chain(4).with_boundary(Boundary::Periodic)).unwrap();
        assert_eq!(ring.bonds(), vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        let grid = build_lattice(LatticeSpec::grid(2, 2)).unwrap();
        assert_eq!(grid.bonds().len(), 4);
    }

    #[test]
    fn graph_metric_is_a_metric_on_small_lattices() {
        let specs = [
            LatticeSpec::chain(7),
            LatticeSpec::chain(7).with_boundary(Boundary::Periodic),
            LatticeSpec::grid(4, 3),
            LatticeSpec::grid(4, 4).with_boundary(Boundary::Periodic),
        ];
        for spec in specs {
            let l = build_lattice(spec).unwrap();
            let n = l.num_sites();
            for a in 0..n {
                assert_eq!(l.distance(a, a), 0.0);
                for b in 0..n {
                    assert_eq!(l.distance(a, b), l.distance(b, a));
                    if a != b {
                        assert!(l.distance(a, b) >= 1.0);
                    }
                    for c in 0..n {
                        assert!(l.distance(a, c) <= l.distance(a, b) + l.distance(b, c));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn open_chain_singleton_distance(i in 0usize..20, j in 0usize..20) {
            let l = build_lattice(LatticeSpec::chain(20)).unwrap();
            let d = region_distance(&l, &Region::single(i), &Region::single(j)).unwrap();
            prop_assert_eq!(d, i.abs_diff(j) as f64);
        }

        #[test]
        fn region_distance_symmetric(
            a in proptest::collection::btree_set(0usize..12, 1..4),
            b in proptest::collection::btree_set(0usize..12, 1..4),
        ) {
            let l = build_lattice(LatticeSpec::grid(4, 3)).unwrap();
            let x = Region::new(a.into_iter().collect()).unwrap();
            let y = Region::new(b.into_iter().collect()).unwrap();
            prop_assert_eq!(
                region_distance(&l, &x, &y).unwrap(),
                region_distance(&l, &y, &x).unwrap()
            );
        }
    }
}
