//! Dense complex linear algebra on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalues below this magnitude are mapped to +1 by [`sign_operator`].
pub const SIGN_TIE_TOL: f64 = 1e-12;

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    let i = C64::new(0.0, 1.0);
    CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn real_matrix(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise deviation `|M - M^dagger|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    hermitian_deviation(m) <= tol
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Spectral decomposition of a Hermitian matrix with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    /// `V f(D) V^dagger`.
    pub fn apply_fn<F>(&self, f: F) -> CMatrix
    where
        F: Fn(f64) -> C64,
    {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// `V f(D) V^dagger v` without forming the matrix.
    pub fn apply_fn_to<F>(&self, f: F, v: &CVector) -> CVector
    where
        F: Fn(f64) -> C64,
    {
        let mut coeffs = self.vectors.ad_mul(v);
        for (c, &lambda) in coeffs.iter_mut().zip(&self.values) {
            *c *= f(lambda);
        }
        &self.vectors * coeffs
    }
}

/// Eigendecomposition of a Hermitian matrix. Purely real input takes the
/// real-symmetric path, which is several times faster.
pub fn eigh(m: &CMatrix) -> Eigh {
    let n = m.nrows();
    let (values, vectors) = if is_real(m) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues.as_slice().to_vec(), real_matrix(&eig.eigenvectors))
    } else {
        let eig = SymmetricEigen::new(hermitian_part(m));
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Eigh {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).values
}

/// Hermitian sign operator `sum_j sgn(l_j) |v_j><v_j|`, the maximizer of
/// `Re Tr(A K)` over Hermitian `A` with `||A|| <= 1`.
pub fn sign_operator(k: &CMatrix) -> CMatrix {
    let eig = eigh(&hermitian_part(k));
    eig.apply_fn(|l| if l < -SIGN_TIE_TOL { -ONE } else { ONE })
}

/// Operator (spectral) norm of a Hermitian matrix.
pub fn operator_norm(m: &CMatrix) -> f64 {
    eigvalsh(&hermitian_part(m))
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.abs()))
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> f64 {
    eigvalsh(&hermitian_part(m)).iter().map(|l| l.abs()).sum()
}

/// Gaussian (GUE-like) random Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    hermitian_part(&g)
}

/// Haar-ish random unit vector (normalized complex Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v.unscale(n)
}

/// Random density matrix `G G^dagger / Tr` with `G` Ginibre of the given dimension.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    hermitian_part(&rho.unscale(tr))
}

/// Random Hermitian operator with spectrum in `[-1, 1]`.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let eig = eigh(&random_hermitian(rng, dim));
    let vals: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut scaled = eig.vectors.clone();
    for (j, v) in vals.iter().enumerate() {
        for z in scaled.column_mut(j).iter_mut() {
            *z *= *v;
        }
    }
    hermitian_part(&(&scaled * eig.vectors.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn paulis_square_to_identity() {
        for p in [pauli_x(), pauli_y(), pauli_z()] {
            assert!((&p * &p - identity(2)).norm() < 1e-15);
            assert!(is_hermitian(&p, 0.0));
        }
    }

    #[test]
    fn apply_fn_to_matches_the_matrix_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eig = eigh(&random_hermitian(&mut rng, 8));
        let v = random_unit_vector(&mut rng, 8);
        let f = |l: f64| C64::new(0.0, -0.7 * l).exp();
        assert!((eig.apply_fn(f) * &v - eig.apply_fn_to(f, &v)).norm() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_complex_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 6);
        let eig = eigh(&h);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let back = eig.apply_fn(|l| C64::new(l, 0.0));
        assert!((back - h).norm() < 1e-10);
    }

    #[test]
    fn sign_operator_maximizes_linear_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = random_hermitian(&mut rng, 4);
        let s = sign_operator(&k);
        let best = trace(&(&s * &k)).re;
        assert!((best - trace_norm(&k)).abs() < 1e-10);
        assert!((operator_norm(&s) - 1.0).abs() < 1e-10);
        for _ in 0..50 {
            let a = random_contraction(&mut rng, 4);
            assert!(trace(&(&a * &k)).re <= best + 1e-10);
        }
    }

    #[test]
    fn zero_operand_maps_to_identity() {
        let s = sign_operator(&CMatrix::zeros(2, 2));
        assert!((s - identity(2)).norm() < 1e-15);
    }

    #[test]
    fn random_density_matrix_is_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density_matrix(&mut rng, 5);
        assert!((trace(&rho).re - 1.0).abs() < 1e-12);
        assert!(eigvalsh(&rho)[0] > -1e-12);
    }
}
