//! Index bookkeeping for tensor products of `n` sites with uniform local
//! dimension `d`. Site 0 is the leftmost (most significant) tensor factor.

use crate::linalg::{CMatrix, CVector, C64, ZERO};

/// Flat-index offsets contributed by each local configuration of `positions`.
///
/// For a sorted subset `P` of `0..n`, entry `a` is `sum_k digit_k(a) * d^(n-1-P[k])`,
/// so that a full index splits as `offsets(P)[a] + offsets(complement)[c]`.
pub fn offsets(n: usize, d: usize, positions: &[usize]) -> Vec<usize> {
    let m = positions.len();
    let weights: Vec<usize> = positions.iter().map(|&p| d.pow((n - 1 - p) as u32)).collect();
    let count = d.pow(m as u32);
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0usize; m];
    for _ in 0..count {
        out.push(digits.iter().zip(&weights).map(|(a, w)| a * w).sum());
        for k in (0..m).rev() {
            digits[k] += 1;
            if digits[k] < d {
                break;
            }
            digits[k] = 0;
        }
    }
    out
}

pub fn complement(n: usize, positions: &[usize]) -> Vec<usize> {
    (0..n).filter(|p| !positions.contains(p)).collect()
}

/// `op ⊗ I` on `n` sites, with `op` acting on the sorted `positions`.
pub fn embed(op: &CMatrix, n: usize, d: usize, positions: &[usize]) -> CMatrix {
    let dim = d.pow(n as u32);
    let inner = offsets(n, d, positions);
    let outer = offsets(n, d, &complement(n, positions));
    let mut full = CMatrix::zeros(dim, dim);
    for &c in &outer {
        for (a, &oa) in inner.iter().enumerate() {
            for (b, &ob) in inner.iter().enumerate() {
                let z = op[(a, b)];
                if z != ZERO {
                    full[(oa + c, ob + c)] = z;
                }
            }
        }
    }
    full
}

/// Partial trace of a density matrix on `n` sites, keeping sorted `keep`.
pub fn partial_trace(rho: &CMatrix, n: usize, d: usize, keep: &[usize]) -> CMatrix {
    let kept = offsets(n, d, keep);
    let traced = offsets(n, d, &complement(n, keep));
    let k = kept.len();
    CMatrix::from_fn(k, k, |a, b| {
        traced
            .iter()
            .map(|&c| rho[(kept[a] + c, kept[b] + c)])
            .sum::<C64>()
    })
}

/// Reduced density matrix of a pure state on `keep`.
pub fn partial_trace_pure(psi: &CVector, n: usize, d: usize, keep: &[usize]) -> CMatrix {
    let kept = offsets(n, d, keep);
    let traced = offsets(n, d, &complement(n, keep));
    let k = kept.len();
    let mut out = CMatrix::zeros(k, k);
    let mut column = vec![ZERO; k];
    for &c in &traced {
        for (a, &oa) in kept.iter().enumerate() {
            column[a] = psi[oa + c];
        }
        for a in 0..k {
            let za = column[a];
            if za == ZERO {
                continue;
            }
            for b in 0..k {
                out[(a, b)] += za * column[b].conj();
            }
        }
    }
    out
}

/// Accumulates `(op ⊗ I) psi` into `out`.
pub fn apply_local_into(
    op: &CMatrix,
    n: usize,
    d: usize,
    positions: &[usize],
    psi: &CVector,
    out: &mut CVector,
) {
    let inner = offsets(n, d, positions);
    let outer = offsets(n, d, &complement(n, positions));
    let k = inner.len();
    let mut local = vec![ZERO; k];
    for &c in &outer {
        for (a, &oa) in inner.iter().enumerate() {
            local[a] = psi[oa + c];
        }
        for (a, &oa) in inner.iter().enumerate() {
            let mut acc = ZERO;
            for (b, z) in local.iter().enumerate() {
                acc += op[(a, b)] * z;
            }
            out[oa + c] += acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, kron, pauli_x, pauli_z, random_density_matrix, random_unit_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn offsets_split_full_index() {
        let inner = offsets(3, 2, &[1]);
        let outer = offsets(3, 2, &[0, 2]);
        assert_eq!(inner, vec![0, 2]);
        assert_eq!(outer, vec![0, 1, 4, 5]);
    }

    #[test]
    fn embed_orders_site_zero_leftmost() {
        let z1 = embed(&pauli_z(), 2, 2, &[1]);
        assert!((z1 - kron(&identity(2), &pauli_z())).norm() < 1e-15);
        let xz = kron(&pauli_x(), &pauli_z());
        let e = embed(&xz, 3, 2, &[0, 2]);
        let expected = kron(&kron(&pauli_x(), &identity(2)), &pauli_z());
        assert!((e - expected).norm() < 1e-15);
    }

    /// Naive partial trace by explicit digit expansion.
    fn naive_partial_trace(rho: &CMatrix, n: usize, keep: &[usize]) -> CMatrix {
        let dim = 1usize << n;
        let k = 1usize << keep.len();
        let bit = |idx: usize, site: usize| (idx >> (n - 1 - site)) & 1;
        let mut out = CMatrix::zeros(k, k);
        for i in 0..dim {
            for j in 0..dim {
                let traced_equal = (0..n)
                    .filter(|s| !keep.contains(s))
                    .all(|s| bit(i, s) == bit(j, s));
                if !traced_equal {
                    continue;
                }
                let a = keep.iter().fold(0, |acc, &s| acc * 2 + bit(i, s));
                let b = keep.iter().fold(0, |acc, &s| acc * 2 + bit(j, s));
                out[(a, b)] += rho[(i, j)];
            }
        }
        out
    }

    #[test]
    fn partial_trace_matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rho = random_density_matrix(&mut rng, 16);
        for keep in [vec![0], vec![2], vec![1, 3], vec![0, 2, 3]] {
            let fast = partial_trace(&rho, 4, 2, &keep);
            let slow = naive_partial_trace(&rho, 4, &keep);
            assert!((fast - slow).norm() < 1e-13);
        }
    }

    #[test]
    fn pure_partial_trace_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_unit_vector(&mut rng, 8);
        let rho = &psi * psi.adjoint();
        for keep in [vec![0], vec![1, 2], vec![0, 2]] {
            let a = partial_trace_pure(&psi, 3, 2, &keep);
            let b = partial_trace(&rho, 3, 2, &keep);
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn apply_local_matches_embedded_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = random_unit_vector(&mut rng, 27);
        let op = crate::linalg::random_hermitian(&mut rng, 9);
        let mut out = CVector::zeros(27);
        apply_local_into(&op, 3, 3, &[0, 2], &psi, &mut out);
        let dense = embed(&op, 3, 3, &[0, 2]) * &psi;
        assert!((out - dense).norm() < 1e-12);
    }
}
