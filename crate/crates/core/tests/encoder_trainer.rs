mod common;

use common::checks::{encoder_fd, hand_loss_case, loss_fd, miner_agreement, ms_loss_fd, random_params};
use common::{random_unit, rng};
use groundbridge::datasim::{build_split, generate_dataset, GeneratorConfig, SplitConfig};
use groundbridge::encoder::{self, EncoderParams};
use groundbridge::trainer::{mine_pairs, ms_loss, similarity_matrix, train, MsLossConfig, SimilarityMatrix, TrainConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// The seven encoder stages written out with plain loops.
fn reference_forward(p: &EncoderParams, input: &[f64]) -> Vec<f64> {
    let mut x: Vec<Vec<f64>> = vec![input.to_vec()];
    for (l, layer) in p.conv.iter().enumerate() {
        let len = x[0].len();
        let mut y = vec![vec![0.0; len - 2]; layer.out_channels];
        for o in 0..layer.out_channels {
            for t in 0..len - 2 {
                let mut s = layer.biases[o];
                for c in 0..layer.in_channels {
                    for j in 0..3 {
                        s += layer.kernels[o * layer.in_channels * 3 + c * 3 + j] * x[c][t + j];
                    }
                }
                y[o][t] = if s > 0.0 { s } else { 0.0 };
            }
        }
        if l < 2 {
            y = y
                .into_iter()
                .map(|row| (0..row.len() / 2).map(|t| row[2 * t].max(row[2 * t + 1])).collect())
                .collect();
        }
        x = y;
    }
    let flat: Vec<f64> = x.concat();
    let d = &p.dense;
    let mut z = vec![0.0; d.out_features];
    for (o, zo) in z.iter_mut().enumerate() {
        *zo = d.biases[o] + (0..d.in_features).map(|i| flat[i] * d.weights[i * d.out_features + o]).sum::<f64>();
    }
    let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    z.into_iter().map(|v| v / n).collect()
}

#[test]
fn forward_matches_straight_line_reference() {
    for seed in 0..5 {
        let p = random_params(seed);
        let mut r = rng(100 + seed);
        let x: Vec<f64> = (0..p.input_len).map(|_| r.random_range(-2.0..2.0)).collect();
        let got = encoder::forward(&p, &x).unwrap().values;
        let want = reference_forward(&p, &x);
        assert_eq!(p.flattened_dim(), 320);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn encoder_gradients_match_finite_differences() {
    let mut checked = 0;
    for seed in 0..20 {
        let s = encoder_fd(seed, 1e-4, 6);
        assert!(s.max_rel < 1e-4, "seed {seed}: {s:?}");
        checked += s.checked;
    }
    assert!(checked > 800, "only {checked} entries were checkable");
}

#[test]
fn loss_gradients_match_finite_differences() {
    for seed in 0..20 {
        let (s, loss) = loss_fd(seed, 1e-4, 4);
        assert!(s.max_rel < 1e-4, "seed {seed}: {s:?}");
        assert!(loss > 0.0 && s.checked > 20);
    }
}

#[test]
fn ms_loss_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let (rel, worst_abs) = ms_loss_fd(seed);
        assert!(rel < 1e-6, "seed {seed}: {rel}");
        assert!(worst_abs < 1e-8, "seed {seed}: {worst_abs}");
    }
}

#[test]
fn single_positive_loss_in_closed_form() {
    let (got, want) = hand_loss_case();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn miner_matches_exhaustive_scan() {
    assert_eq!(miner_agreement(1000, 5), 1000);
}

#[test]
fn similarity_matches_pairwise_dots() {
    let mut r = rng(9);
    let emb: Vec<Vec<f64>> = (0..10).map(|_| random_unit(&mut r, 64)).collect();
    let labels: Vec<usize> = (0..10).map(|i| i % 3).collect();
    let s = similarity_matrix(&emb, &labels).unwrap();
    for i in 0..10 {
        for k in 0..10 {
            assert!((s.values[i][k] - common::dot(&emb[i], &emb[k])).abs() < 1e-12);
        }
    }
}

#[test]
fn perfect_separation_gives_zero_loss() {
    let labels = vec![0, 0, 1, 1, 2];
    let values = (0..5)
        .map(|i| (0..5).map(|k| if labels[i] == labels[k] { 1.0 } else { -1.0 }).collect())
        .collect();
    let sim = SimilarityMatrix { values, labels };
    let cfg = MsLossConfig::default();
    let pairs = mine_pairs(&sim, &cfg);
    let (loss, grad) = ms_loss(&sim, &pairs, &cfg);
    assert_eq!(loss, 0.0);
    assert!(grad.iter().flatten().all(|g| *g == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_permutation_invariant(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let labels: Vec<usize> = (0..10).map(|_| r.random_range(0..3)).collect();
        let emb: Vec<Vec<f64>> = (0..10).map(|_| random_unit(&mut r, 16)).collect();
        let cfg = MsLossConfig::default();
        let loss_of = |e: &[Vec<f64>], l: &[usize]| {
            let s = similarity_matrix(e, l).unwrap();
            ms_loss(&s, &mine_pairs(&s, &cfg), &cfg).0
        };
        let mut order: Vec<usize> = (0..10).collect();
        order.shuffle(&mut r);
        let pe: Vec<Vec<f64>> = order.iter().map(|&i| emb[i].clone()).collect();
        let pl: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        prop_assert!((loss_of(&emb, &labels) - loss_of(&pe, &pl)).abs() < 1e-12);
    }

    #[test]
    fn unmined_entries_have_zero_gradient(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let labels: Vec<usize> = (0..8).map(|_| r.random_range(0..2)).collect();
        let emb: Vec<Vec<f64>> = (0..8).map(|_| random_unit(&mut r, 6)).collect();
        let cfg = MsLossConfig::default();
        let s = similarity_matrix(&emb, &labels).unwrap();
        let pairs = mine_pairs(&s, &cfg);
        let (_, grad) = ms_loss(&s, &pairs, &cfg);
        for i in 0..8 {
            for k in 0..8 {
                if !pairs.positives[i].contains(&k) && !pairs.negatives[i].contains(&k) {
                    prop_assert_eq!(grad[i][k], 0.0);
                }
            }
        }
    }
}

fn small_split() -> groundbridge::datasim::DatasetSplit {
    let samples = generate_dataset(
        &GeneratorConfig {
            samples_per_class: 40,
            ..GeneratorConfig::default()
        },
        3,
    )
    .unwrap();
    let cfg = SplitConfig {
        train_per_class: 20,
        test_per_class: 5,
        index_per_class: 5,
    };
    build_split(&samples, &cfg, 3).unwrap()
}

#[test]
fn training_is_deterministic() {
    let split = small_split();
    let cfg = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let (p1, h1) = train(&split, &MsLossConfig::default(), &cfg, 4).unwrap();
    let (p2, h2) = train(&split, &MsLossConfig::default(), &cfg, 4).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(p1, p2);
    assert_eq!(h1.records.len(), 4);
    let (p3, _) = train(&split, &MsLossConfig::default(), &cfg, 5).unwrap();
    assert_ne!(p1, p3);
}

#[test]
fn zero_epochs_returns_initialization() {
    let split = small_split();
    let cfg = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    let (p, h) = train(&split, &MsLossConfig::default(), &cfg, 4).unwrap();
    assert!(h.records.is_empty());
    assert_eq!(p, encoder::init_params(4));
}
