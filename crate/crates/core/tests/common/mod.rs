#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpgraph_core::linalg::largest_eigenvalue;
use tpgraph_core::PrecisionModel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `G Gᵀ + 0.1 I` with uniform(−1, 1) entries in `G`.
pub fn random_spd(q: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(q, q, |_, _| rng.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(q, q) * 0.1
}

/// Random M-matrix: `δI − B` for a sparse nonnegative symmetric `B` and
/// `δ` a random factor above `λ₁(B)`, congruence-scaled by a positive diagonal.
pub fn random_m_matrix(p: usize, rng: &mut impl Rng) -> PrecisionModel {
    let density = rng.random_range(0.2..0.9);
    let mut b = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.random::<f64>() < density {
                let w = rng.random_range(0.05..1.0);
                b[(i, j)] = w;
                b[(j, i)] = w;
            }
        }
    }
    let lambda = largest_eigenvalue(&b, 1e-12, 1_000_000).unwrap();
    let delta = lambda * rng.random_range(1.02..2.0) + 0.05;
    let d: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..2.0)).collect();
    let theta = DMatrix::from_fn(p, p, |i, j| {
        let base = if i == j { delta } else { -b[(i, j)] };
        d[i] * base * d[j]
    });
    PrecisionModel::from_precision(theta).unwrap()
}

/// All subsets of `pool`.
pub fn subsets(pool: &[usize]) -> Vec<Vec<usize>> {
    (0u32..(1 << pool.len()))
        .map(|mask| {
            pool.iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}
