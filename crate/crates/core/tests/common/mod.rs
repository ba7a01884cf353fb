//! Test-only generators and oracles shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use submatch::{Dataset, Matrix, Network};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Bias-free ReLU network with the given widths and Gaussian weights.
pub fn random_network(rng: &mut ChaCha8Rng, widths: &[usize]) -> Network {
    let ws = widths.windows(2).map(|w| gaussian_matrix(rng, w[1], w[0])).collect();
    Network::from_weights(ws).unwrap()
}

pub fn random_widths(rng: &mut ChaCha8Rng, max_width: usize) -> Vec<usize> {
    let depth = rng.random_range(2..=4);
    (0..=depth).map(|_| rng.random_range(1..=max_width)).collect()
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    Dataset::new((0..d).map(|_| gaussian_vec(rng, n)).collect(), None).unwrap()
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

/// Rank by Gram-Schmidt with column pivoting: a vector counts when its
/// residual norm exceeds `rel_tol` times the largest input norm. Independent
/// of the SVD path used by the library.
pub fn pivoted_gs_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let scale = rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut residual: Vec<Vec<f64>> = rows.to_vec();
    let mut rank = 0;
    loop {
        let (best, norm) = residual
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.iter().map(|x| x * x).sum::<f64>().sqrt()))
            .fold((usize::MAX, 0.0), |acc, (i, n)| if n > acc.1 { (i, n) } else { acc });
        if best == usize::MAX || norm <= rel_tol * scale {
            return rank;
        }
        let q: Vec<f64> = residual[best].iter().map(|x| x / norm).collect();
        residual.swap_remove(best);
        for _ in 0..2 {
            for r in residual.iter_mut() {
                let c: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
                for (ri, qi) in r.iter_mut().zip(&q) {
                    *ri -= c * qi;
                }
            }
        }
        rank += 1;
    }
}

/// Whether two finite sets of vectors span the same subspace, decided by
/// [`pivoted_gs_rank`].
pub fn oracle_same_span(a: &[Vec<f64>], b: &[Vec<f64>], rel_tol: f64) -> bool {
    let ra = pivoted_gs_rank(a, rel_tol);
    let rb = pivoted_gs_rank(b, rel_tol);
    let both: Vec<Vec<f64>> = a.iter().chain(b).cloned().collect();
    ra == rb && pivoted_gs_rank(&both, rel_tol) == ra
}

/// Exact determinant of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return 0;
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Exact rank of integer vectors: the largest `k` such that some `k`-subset
/// has a non-zero Gram determinant.
pub fn gram_rank(vectors: &[Vec<i64>]) -> usize {
    let n = vectors.len();
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if idx.len() <= best {
            continue;
        }
        let gram: Vec<Vec<i128>> = idx
            .iter()
            .map(|&i| {
                idx.iter()
                    .map(|&j| vectors[i].iter().zip(&vectors[j]).map(|(a, b)| (*a as i128) * (*b as i128)).sum())
                    .collect()
            })
            .collect();
        if bareiss_det(gram) != 0 {
            best = idx.len();
        }
    }
    best
}
