//! Oracle checks shared by the unit-level tests and the acceptance suite.

use groundbridge::bridge::{fit_ridge_arrays, RidgeConfig, RidgeObjective};
use groundbridge::datasim::{ObjectClass, Supercategory};
use groundbridge::encoder::{self, activation_pattern, forward_trace, EncoderParams, EMBEDDING_DIM};
use groundbridge::trainer::{batch_step, mine_pairs, ms_loss, similarity_matrix, MinedPairs, MsLossConfig, SimilarityMatrix};
use groundbridge::eval::{knn_f1, pca_2d, Label};
use groundbridge::objindex::ObjectIndex;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{brute_top_k, brute_vote, dot, jacobi_eigen, random_unit, random_vec, rng, solve};

/// Relative error with a small absolute floor so that exactly-zero and
/// round-off-sized gradients compare sanely.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FdStats {
    pub checked: usize,
    /// Entries whose ±h step crossed a ReLU, pooling or mining boundary.
    pub skipped: usize,
    pub max_rel: f64,
}

impl FdStats {
    pub fn merge(&mut self, other: FdStats) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.max_rel = self.max_rel.max(other.max_rel);
    }
}

fn perturbed(params: &EncoderParams, t: usize, j: usize, delta: f64) -> EncoderParams {
    let mut p = params.clone();
    p.tensors_mut()[t][j] += delta;
    p
}

/// Random weights from the library initializer plus random biases, so the
/// bias gradients are exercised away from zero.
pub fn random_params(seed: u64) -> EncoderParams {
    let mut p = encoder::init_params(seed);
    let mut r = rng(seed ^ 0xb1a5);
    for (i, t) in p.tensors_mut().into_iter().enumerate() {
        if i % 2 == 1 {
            for v in t.iter_mut() {
                *v = r.random_range(-0.1..0.1);
            }
        }
    }
    p
}

fn patterns(params: &EncoderParams, inputs: &[Vec<f64>]) -> Vec<Vec<u32>> {
    inputs
        .iter()
        .map(|x| activation_pattern(&forward_trace(params, x).unwrap()))
        .collect()
}

fn sample_entries(params: &EncoderParams, per_tensor: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (t, tensor) in params.tensors().iter().enumerate() {
        let idx: Vec<usize> = (0..tensor.len()).collect();
        for &j in idx.choose_multiple(r, per_tensor.min(tensor.len())) {
            out.push((t, j));
        }
    }
    out
}

/// Gradient of `<g, f(x)>` for a single sample against central differences.
pub fn encoder_fd(seed: u64, h: f64, per_tensor: usize) -> FdStats {
    let params = random_params(seed);
    let mut r = rng(seed);
    let x: Vec<f64> = (0..params.input_len).map(|_| r.random_range(-2.0..2.0)).collect();
    let g = random_vec(&mut r, EMBEDDING_DIM);
    let grads = encoder::backward(&params, &[x.clone()], &[g.clone()]).unwrap();
    let objective = |p: &EncoderParams| dot(&g, &encoder::forward(p, &x).unwrap().values);
    let base = patterns(&params, &[x.clone()]);
    let mut stats = FdStats::default();
    for (t, j) in sample_entries(&params, per_tensor, &mut r) {
        let (pp, pm) = (perturbed(&params, t, j, h), perturbed(&params, t, j, -h));
        if patterns(&pp, &[x.clone()]) != base || patterns(&pm, &[x.clone()]) != base {
            stats.skipped += 1;
            continue;
        }
        let numeric = (objective(&pp) - objective(&pm)) / (2.0 * h);
        stats.max_rel = stats.max_rel.max(rel_err(grads.tensors()[t][j], numeric));
        stats.checked += 1;
    }
    stats
}

/// Full encoder plus loss on a two-class batch of four.
pub fn loss_fd(seed: u64, h: f64, per_tensor: usize) -> (FdStats, f64) {
    let params = random_params(seed);
    let mut r = rng(seed.wrapping_mul(31) + 1);
    let inputs: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..params.input_len).map(|_| r.random_range(-2.0..2.0)).collect())
        .collect();
    let labels = [0, 0, 1, 1];
    let cfg = MsLossConfig::default();
    let base = batch_step(&params, &inputs, &labels, &cfg).unwrap();
    let base_pattern = patterns(&params, &inputs);
    let mut stats = FdStats::default();
    for (t, j) in sample_entries(&params, per_tensor, &mut r) {
        let (pp, pm) = (perturbed(&params, t, j, h), perturbed(&params, t, j, -h));
        let plus = batch_step(&pp, &inputs, &labels, &cfg).unwrap();
        let minus = batch_step(&pm, &inputs, &labels, &cfg).unwrap();
        if plus.pairs != base.pairs
            || minus.pairs != base.pairs
            || patterns(&pp, &inputs) != base_pattern
            || patterns(&pm, &inputs) != base_pattern
        {
            stats.skipped += 1;
            continue;
        }
        let numeric = (plus.loss - minus.loss) / (2.0 * h);
        stats.max_rel = stats.max_rel.max(rel_err(base.grads.tensors()[t][j], numeric));
        stats.checked += 1;
    }
    (stats, base.loss)
}

/// dL/dS against central differences on a random 6x6 similarity matrix,
/// with the mined pairs held fixed. Returns the norm-wise relative error
/// `|a - n| / |n|` over the whole matrix and the largest entrywise absolute
/// error.
pub fn ms_loss_fd(seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let labels: Vec<usize> = (0..6).map(|i| i % 2).collect();
    let values: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..6).map(|_| r.random_range(-0.3..0.9)).collect())
        .collect();
    let sim = SimilarityMatrix { values, labels };
    let cfg = MsLossConfig {
        epsilon_margin: 2.0,
        ..MsLossConfig::default()
    };
    let pairs = mine_pairs(&sim, &cfg);
    let (_, grad) = ms_loss(&sim, &pairs, &cfg);
    let h = 1e-6;
    let (mut diff2, mut norm2, mut worst_abs) = (0.0, 0.0, 0.0f64);
    for i in 0..6 {
        for k in 0..6 {
            let mut plus = sim.clone();
            plus.values[i][k] += h;
            let mut minus = sim.clone();
            minus.values[i][k] -= h;
            let numeric = (ms_loss(&plus, &pairs, &cfg).0 - ms_loss(&minus, &pairs, &cfg).0) / (2.0 * h);
            diff2 += (grad[i][k] - numeric).powi(2);
            norm2 += numeric * numeric;
            worst_abs = worst_abs.max((grad[i][k] - numeric).abs());
        }
    }
    ((diff2 / norm2).sqrt(), worst_abs)
}

/// One anchor with one positive at similarity 0.8 and nothing else; the
/// returned pair is (library value, closed form).
pub fn hand_loss_case() -> (f64, f64) {
    let sim = SimilarityMatrix {
        values: vec![vec![1.0]],
        labels: vec![0],
    };
    let mut pairs = MinedPairs::empty(1);
    pairs.positives[0].push(0);
    let mut s = sim.clone();
    s.values[0][0] = 0.8;
    let cfg = MsLossConfig {
        alpha: 2.0,
        lambda_thr: 0.5,
        ..MsLossConfig::default()
    };
    let (loss, _) = ms_loss(&s, &pairs, &cfg);
    (loss, 0.5 * (1.0 + (-0.6f64).exp()).ln())
}

/// Exhaustive restatement of the hard-pair rule.
pub fn brute_mine(sim: &SimilarityMatrix, eps: f64) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let m = sim.labels.len();
    let mut pos = vec![Vec::new(); m];
    let mut neg = vec![Vec::new(); m];
    for i in 0..m {
        for k in 0..m {
            if k == i {
                continue;
            }
            let same = sim.labels[k] == sim.labels[i];
            let hard = (0..m).filter(|&j| j != i && (sim.labels[j] == sim.labels[i]) != same).any(|j| {
                if same {
                    // Some negative is at least as similar as this positive, within eps.
                    sim.values[i][k] < sim.values[i][j] + eps
                } else {
                    sim.values[i][k] > sim.values[i][j] - eps
                }
            });
            if hard {
                if same {
                    pos[i].push(k);
                } else {
                    neg[i].push(k);
                }
            }
        }
    }
    (pos, neg)
}

/// Runs `n` random ten-sample batches and counts exact agreements.
pub fn miner_agreement(n: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let cfg = MsLossConfig::default();
    let mut agree = 0;
    for _ in 0..n {
        let labels: Vec<usize> = (0..10).map(|_| r.random_range(0..3)).collect();
        let emb: Vec<Vec<f64>> = (0..10).map(|_| random_unit(&mut r, 8)).collect();
        let sim = similarity_matrix(&emb, &labels).unwrap();
        let got = mine_pairs(&sim, &cfg);
        let (pos, neg) = brute_mine(&sim, cfg.epsilon_margin);
        agree += (got.positives == pos && got.negatives == neg) as usize;
    }
    agree
}

pub fn random_index(r: &mut ChaCha8Rng, n: usize, d: usize) -> ObjectIndex {
    let mut idx = ObjectIndex::default();
    for _ in 0..n {
        idx.push(random_unit(r, d), ObjectClass::ALL[r.random_range(0..11)]).unwrap();
    }
    idx
}

/// Exhaustive restatement: relabel or filter the index, scan, vote, score.
pub fn brute_knn_f1(index: &ObjectIndex, points: &[(Vec<f64>, Label)], pair: [Label; 2], k: usize) -> (Vec<Label>, f64) {
    let entries: Vec<(Vec<f64>, Label)> = index
        .embeddings
        .iter()
        .zip(&index.labels)
        .filter_map(|(e, &c)| match pair[0] {
            Label::Super(_) => Some((e.clone(), Label::Super(c.supercategory()))),
            Label::Class(_) => pair.contains(&Label::Class(c)).then(|| (e.clone(), Label::Class(c))),
        })
        .collect();
    let rows: Vec<Vec<f64>> = entries.iter().map(|e| e.0.clone()).collect();
    let preds: Vec<Label> = points
        .iter()
        .map(|(v, _)| {
            let votes: Vec<(Label, f64)> = brute_top_k(&rows, v, k).into_iter().map(|(i, s)| (entries[i].1, s)).collect();
            brute_vote(&votes)
        })
        .collect();
    let mut f1s = Vec::new();
    for l in pair {
        let tp = points.iter().zip(&preds).filter(|((_, g), p)| *g == l && **p == l).count() as f64;
        let fp = points.iter().zip(&preds).filter(|((_, g), p)| *g != l && **p == l).count() as f64;
        let fnn = points.iter().zip(&preds).filter(|((_, g), p)| *g == l && **p != l).count() as f64;
        f1s.push(if tp + fp + fnn == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fnn) });
    }
    (preds, (f1s[0] + f1s[1]) / 2.0)
}

pub fn random_pair(r: &mut ChaCha8Rng) -> [Label; 2] {
    if r.random_bool(0.5) {
        [Label::Super(Supercategory::FlatSided), Label::Super(Supercategory::Round)]
    } else {
        let mut classes = ObjectClass::ALL.to_vec();
        classes.shuffle(r);
        [Label::Class(classes[0]), Label::Class(classes[1])]
    }
}

pub fn random_rotation(r: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v = random_vec(r, d);
        for u in &q {
            let c = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-6 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

pub fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Runs `knn_f1` and the exhaustive scan on `instances` random problems and
/// counts the ones where predictions and macro F1 agree exactly.
pub fn knn_agreement(instances: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let (mut done, mut agree) = (0, 0);
    while done < instances {
        let idx = random_index(&mut r, 150, 12);
        let pair = random_pair(&mut r);
        let usable = idx
            .labels
            .iter()
            .filter(|c| matches!(pair[0], Label::Super(_)) || pair.contains(&Label::Class(**c)))
            .count();
        if usable < 9 {
            continue;
        }
        let k = r.random_range(1..10);
        let points: Vec<(Vec<f64>, Label)> = (0..30).map(|_| (random_vec(&mut r, 12), pair[r.random_range(0..2)])).collect();
        let got = knn_f1(&idx, &points, pair, k).unwrap();
        let (preds, macro_f1) = brute_knn_f1(&idx, &points, pair, k);
        if got.predictions == preds && got.macro_f1 == macro_f1 {
            agree += 1;
        }
        done += 1;
    }
    agree
}

/// Smallest |cosine| between a `pca_2d` component and the matching Jacobi
/// eigenvector, and the largest explained-variance error, over `trials`
/// anisotropic point clouds.
pub fn pca_oracle(trials: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut min_cos, mut max_var_err) = (1.0f64, 0.0f64);
    for _ in 0..trials {
        let d = 12;
        let scales: Vec<f64> = (0..d).map(|i| 3.0 / (1.0 + i as f64)).collect();
        let q = random_rotation(&mut r, d);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let z: Vec<f64> = random_vec(&mut r, d).iter().zip(&scales).map(|(x, s)| x * s).collect();
                matvec(&q, &z)
            })
            .collect();
        let mean: Vec<f64> = (0..d).map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / 50.0).collect();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| pts.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / 49.0).collect())
            .collect();
        let (vals, vecs) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let got = pca_2d(&pts).unwrap();
        for c in 0..2 {
            min_cos = min_cos.min(dot(&got.components[c], &vecs[order[c]]).abs());
            max_var_err = max_var_err.max((got.explained_variance[c] - vals[order[c]]).abs());
        }
    }
    (min_cos, max_var_err)
}

/// Largest deviation of `fit_ridge_arrays` from the normal equations of a
/// hand-written 3-pair, d=2 system, offset unpenalized.
pub fn ridge_hand_err() -> f64 {
    let xs = [[1.0, 2.0], [-0.5, 0.3], [2.0, -1.0]];
    let ys = [[0.7, -1.2], [1.4, 0.1], [-0.3, 2.2]];
    let lambda = 0.1;
    let config = RidgeConfig {
        lambda,
        objective: RidgeObjective::Sum,
    };
    let map = fit_ridge_arrays(&xs, &ys, &config).unwrap();
    let aug = |x: &[f64; 2]| [x[0], x[1], 1.0];
    let mut a = vec![vec![0.0; 3]; 3];
    for x in &xs {
        let r = aug(x);
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    a[0][0] += lambda;
    a[1][1] += lambda;
    let mut worst = 0.0f64;
    for o in 0..2 {
        let b: Vec<f64> = (0..3).map(|i| xs.iter().zip(&ys).map(|(x, y)| aug(x)[i] * y[o]).sum()).collect();
        let theta = solve(a.clone(), b);
        worst = worst
            .max((map.weights[o] - theta[0]).abs())
            .max((map.weights[2 + o] - theta[1]).abs())
            .max((map.offset[o] - theta[2]).abs());
    }
    worst
}

/// Largest deviation from the identity map when regressing 200 random
/// 64-dimensional points onto themselves at λ=1e-10.
pub fn ridge_identity_err() -> f64 {
    let mut r = rng(1);
    let xs: Vec<Vec<f64>> = (0..200).map(|_| random_vec(&mut r, 64)).collect();
    let config = RidgeConfig {
        lambda: 1e-10,
        objective: RidgeObjective::Sum,
    };
    let map = fit_ridge_arrays(&xs, &xs, &config).unwrap();
    let mut worst = 0.0f64;
    for i in 0..64 {
        for j in 0..64 {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((map.weights[i * 64 + j] - want).abs());
        }
        worst = worst.max(map.offset[i].abs());
    }
    worst
}
