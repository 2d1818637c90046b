//! Matrix-free Lanczos routines for pure states.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Krylov subspace dimension before a restart (eigensolver) or per step (propagator).
    pub subspace_dim: usize,
    /// Residual tolerance for Ritz pairs, and local error tolerance per propagation step.
    pub tol: f64,
    pub max_restarts: usize,
    /// Seed for the random Lanczos start vector.
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            subspace_dim: 60,
            tol: 1e-11,
            max_restarts: 200,
            seed: 0x5eed,
        }
    }
}

fn project_out(w: &mut CVector, basis: &[CVector]) {
    for v in basis {
        let c = v.dotc(w);
        w.axpy(-c, v, linalg::ONE);
    }
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    SymmetricEigen::new(t)
}

fn combine(basis: &[CVector], coeffs: impl Iterator<Item = C64>) -> CVector {
    let mut out = CVector::zeros(basis[0].len());
    for (v, c) in basis.iter().zip(coeffs) {
        out.axpy(c, v, linalg::ONE);
    }
    out
}

/// Lowest eigenpair of `P H P` on the orthogonal complement of `deflate`
/// (orthonormal vectors), by restarted Lanczos with full reorthogonalization.
pub fn lowest_eigenpair<F>(
    apply: F,
    dim: usize,
    deflate: &[CVector],
    opts: &KrylovOptions,
) -> Result<(f64, CVector)>
where
    F: Fn(&CVector) -> CVector,
{
    if deflate.len() >= dim {
        return Err(Error::InvalidParameter("nothing left after deflation".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = linalg::random_unit_vector(&mut rng, dim);
    project_out(&mut x, deflate);
    project_out(&mut x, deflate);
    x.unscale_mut(x.norm());

    let m = opts.subspace_dim.max(2).min(dim - deflate.len());
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<CVector> = vec![x.clone()];
        let mut alphas: Vec<f64> = Vec::with_capacity(m);
        let mut betas: Vec<f64> = Vec::with_capacity(m);
        loop {
            let j = basis.len() - 1;
            let mut w = apply(&basis[j]);
            project_out(&mut w, deflate);
            let alpha = basis[j].dotc(&w).re;
            alphas.push(alpha);
            for _ in 0..2 {
                project_out(&mut w, &basis);
                project_out(&mut w, deflate);
            }
            let beta = w.norm();
            let eig = tridiagonal(&alphas, &betas);
            let (lo, theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, &v)| (i, v))
                .unwrap();
            let s = eig.eigenvectors.column(lo);
            let residual = beta * s[alphas.len() - 1].abs();
            let done = residual <= opts.tol * theta.abs().max(1.0) || beta < 1e-14;
            if done || basis.len() == m {
                let mut ritz = combine(&basis, s.iter().map(|&c| C64::new(c, 0.0)));
                ritz.unscale_mut(ritz.norm());
                if done {
                    return Ok((theta, ritz));
                }
                x = ritz;
                break;
            }
            betas.push(beta);
            basis.push(w.unscale(beta));
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "Lanczos did not reach residual {} within {} restarts",
        opts.tol, opts.max_restarts
    )))
}

/// `exp(-i t H) psi` by adaptive Krylov steps.
pub fn evolve<F>(apply: F, psi: &CVector, t: f64, opts: &KrylovOptions) -> Result<CVector>
where
    F: Fn(&CVector) -> CVector,
{
    let dim = psi.len();
    let norm = psi.norm();
    let mut state = psi.unscale(norm);
    let mut remaining = t;
    let mut step = t;
    let m = opts.subspace_dim.max(2).min(dim);
    let mut halvings = 0usize;
    while remaining.abs() > 0.0 {
        let mut basis: Vec<CVector> = vec![state.clone()];
        let mut alphas = Vec::with_capacity(m);
        let mut betas = Vec::with_capacity(m);
        let mut tail = 0.0;
        loop {
            let j = basis.len() - 1;
            let mut w = apply(&basis[j]);
            alphas.push(basis[j].dotc(&w).re);
            for _ in 0..2 {
                project_out(&mut w, &basis);
            }
            let beta = w.norm();
            if beta < 1e-14 {
                break;
            }
            if basis.len() == m {
                tail = beta;
                break;
            }
            betas.push(beta);
            basis.push(w.unscale(beta));
        }
        let eig = tridiagonal(&alphas, &betas);
        let k = alphas.len();
        loop {
            let h = if step.abs() < remaining.abs() { step } else { remaining };
            // c = S exp(-i h Theta) S^T e1
            let mut c = vec![C64::new(0.0, 0.0); k];
            for (col, &theta) in eig.eigenvalues.iter().enumerate() {
                let w = C64::new(0.0, -h * theta).exp() * eig.eigenvectors[(0, col)];
                for (row, ci) in c.iter_mut().enumerate() {
                    *ci += eig.eigenvectors[(row, col)] * w;
                }
            }
            let err = tail * c[k - 1].norm();
            if err > opts.tol && tail > 0.0 {
                step = h / 2.0;
                halvings += 1;
                if halvings > 200 {
                    return Err(Error::ConvergenceFailure("Krylov step size underflow".into()));
                }
                continue;
            }
            state = combine(&basis, c.into_iter());
            state.unscale_mut(state.norm());
            remaining -= h;
            step = h * 1.5;
            break;
        }
    }
    Ok(state.scale(norm))
}
