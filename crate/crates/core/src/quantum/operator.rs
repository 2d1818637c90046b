use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::{self, CMatrix};

/// Hermiticity tolerance for operators and Hamiltonian terms.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Slack allowed on `||A|| <= 1` for measurement operators.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::X => linalg::pauli_x(),
            Pauli::Y => linalg::pauli_y(),
            Pauli::Z => linalg::pauli_z(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A Hermitian operator together with the region it acts on.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    support: Region,
    matrix: CMatrix,
    local_dim: usize,
    norm: f64,
}

impl LocalOperator {
    pub fn new(support: Region, matrix: CMatrix, local_dim: usize) -> Result<Self> {
        let expected = local_dim.pow(support.size() as u32);
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: matrix.nrows(),
            });
        }
        let deviation = linalg::hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let norm = linalg::operator_norm(&matrix);
        Ok(Self {
            support,
            matrix,
            local_dim,
            norm,
        })
    }

    pub fn pauli(site: usize, p: Pauli) -> Self {
        Self {
            support: Region::single(site),
            matrix: p.matrix(),
            local_dim: 2,
            norm: 1.0,
        }
    }

    pub fn identity(support: Region, local_dim: usize) -> Self {
        let dim = local_dim.pow(support.size() as u32);
        Self {
            support,
            matrix: linalg::identity(dim),
            local_dim,
            norm: 1.0,
        }
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Operator norm (largest absolute eigenvalue).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_measurement(&self) -> bool {
        self.norm <= 1.0 + NORM_TOL
    }

    pub fn check_measurement(&self) -> Result<()> {
        if self.is_measurement() {
            Ok(())
        } else {
            Err(Error::NormViolation { norm: self.norm })
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            support: self.support.clone(),
            matrix: self.matrix.scale(s),
            local_dim: self.local_dim,
            norm: self.norm * s.abs(),
        }
    }

    /// The same operator viewed on a larger region (identity on the added sites).
    pub fn padded(&self, region: &Region) -> Result<Self> {
        let positions = self.support.positions_in(region.sites())?;
        let matrix = crate::tensor::embed(&self.matrix, region.size(), self.local_dim, &positions);
        Ok(Self {
            support: region.clone(),
            matrix,
            local_dim: self.local_dim,
            norm: self.norm,
        })
    }
}

/// Fails with `OverlappingSupports` unless the supports are pairwise disjoint.
pub fn check_disjoint_supports(ops: &[&LocalOperator]) -> Result<()> {
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i + 1..] {
            if a.support().intersects(b.support()) {
                return Err(Error::OverlappingSupports);
            }
        }
    }
    Ok(())
}
