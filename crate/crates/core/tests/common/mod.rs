//! Independent reference implementations used as test oracles. Nothing in
//! this file calls into the library; `checks` drives library code against
//! these references.

#![allow(dead_code)]

pub mod checks;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    unit(random_vec(rng, d))
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues and the matching eigenvectors (as rows).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    let vecs: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (vals, vecs)
}

/// Exhaustive cosine scan: indices of the `k` most similar rows, ties to the
/// earlier row.
pub fn brute_top_k(rows: &[Vec<f64>], q: &[f64], k: usize) -> Vec<(usize, f64)> {
    let qn = dot(q, q).sqrt();
    let mut all: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, dot(r, q) / (dot(r, r).sqrt() * qn)))
        .collect();
    // Stable insertion sort by descending similarity.
    for i in 1..all.len() {
        let mut j = i;
        while j > 0 && all[j].1 > all[j - 1].1 {
            all.swap(j, j - 1);
            j -= 1;
        }
    }
    all.truncate(k);
    all
}

/// Most frequent label; ties go to the higher mean similarity, then to the
/// smaller label.
pub fn brute_vote<L: Copy + Ord>(votes: &[(L, f64)]) -> L {
    let mut labels: Vec<L> = votes.iter().map(|v| v.0).collect();
    labels.sort();
    labels.dedup();
    let mut best: Option<(L, usize, f64)> = None;
    for l in labels {
        let sims: Vec<f64> = votes.iter().filter(|v| v.0 == l).map(|v| v.1).collect();
        let count = sims.len();
        let mean = sims.iter().sum::<f64>() / count as f64;
        let better = match best {
            None => true,
            Some((_, c, m)) => count > c || (count == c && mean > m),
        };
        if better {
            best = Some((l, count, mean));
        }
    }
    best.unwrap().0
}
