//! Multi-similarity metric learning: pair mining, the loss, Adam and the
//! episodic training loop.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datasim::{DatasetSplit, ObjectClass};
use crate::encoder::{self, EncoderParams, ParamGrads, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsLossConfig {
    /// Scale on positive pairs.
    pub alpha: f64,
    /// Scale on negative pairs.
    pub beta: f64,
    /// Similarity offset the pair terms are measured from.
    pub lambda_thr: f64,
    /// Mining margin.
    pub epsilon_margin: f64,
}

impl Default for MsLossConfig {
    fn default() -> Self {
        MsLossConfig {
            alpha: 2.0,
            beta: 40.0,
            lambda_thr: 0.5,
            epsilon_margin: 0.1,
        }
    }
}

impl MsLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda_thr) {
            return Err(Error::Config("lambda_thr must lie in [0, 1]".into()));
        }
        if !(self.epsilon_margin >= 0.0) {
            return Err(Error::Config("epsilon_margin must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    /// Row-major `m x m`.
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Pairwise dot products of unit-norm embeddings.
pub fn similarity_matrix(embeddings: &[Vec<f64>], labels: &[usize]) -> Result<SimilarityMatrix> {
    if embeddings.is_empty() {
        return Err(Error::Argument("similarity of an empty batch".into()));
    }
    if embeddings.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} embeddings but {} labels",
            embeddings.len(),
            labels.len()
        )));
    }
    for (i, e) in embeddings.iter().enumerate() {
        let n = dot(e, e).sqrt();
        if (n - 1.0).abs() > 1e-3 {
            return Err(Error::Contract(format!("embedding {i} has norm {n}")));
        }
    }
    let m = embeddings.len();
    let mut values = vec![vec![0.0; m]; m];
    for i in 0..m {
        for k in i..m {
            let s = dot(&embeddings[i], &embeddings[k]);
            values[i][k] = s;
            values[k][i] = s;
        }
    }
    Ok(SimilarityMatrix {
        values,
        labels: labels.to_vec(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MinedPairs {
    pub positives: Vec<Vec<usize>>,
    pub negatives: Vec<Vec<usize>>,
    /// The batch held a single label, so nothing could be mined.
    pub single_class: bool,
}

impl MinedPairs {
    pub fn empty(m: usize) -> Self {
        MinedPairs {
            positives: vec![Vec::new(); m],
            negatives: vec![Vec::new(); m],
            single_class: false,
        }
    }

    pub fn num_positive(&self) -> usize {
        self.positives.iter().map(Vec::len).sum()
    }

    pub fn num_negative(&self) -> usize {
        self.negatives.iter().map(Vec::len).sum()
    }
}

/// Hard pair selection per anchor `i`:
/// a negative `k` is kept when `S_ik > min_{same label} S_ij - eps`,
/// a positive `k` is kept when `S_ik < max_{other label} S_ij + eps`.
pub fn mine_pairs(sim: &SimilarityMatrix, config: &MsLossConfig) -> MinedPairs {
    let m = sim.len();
    let mut out = MinedPairs::empty(m);
    let first = sim.labels.first().copied();
    out.single_class = sim.labels.iter().all(|l| Some(*l) == first);
    for i in 0..m {
        let row = &sim.values[i];
        let mut min_pos = f64::INFINITY;
        let mut max_neg = f64::NEG_INFINITY;
        for k in 0..m {
            if k == i {
                continue;
            }
            if sim.labels[k] == sim.labels[i] {
                min_pos = min_pos.min(row[k]);
            } else {
                max_neg = max_neg.max(row[k]);
            }
        }
        for k in 0..m {
            if k == i {
                continue;
            }
            if sim.labels[k] == sim.labels[i] {
                if row[k] < max_neg + config.epsilon_margin {
                    out.positives[i].push(k);
                }
            } else if row[k] > min_pos - config.epsilon_margin {
                out.negatives[i].push(k);
            }
        }
    }
    out
}

/// `log(1 + sum exp(a_k))` and the weights `exp(a_k) / (1 + sum exp(a_j))`.
fn soft_plus_sum(args: &[f64]) -> (f64, Vec<f64>) {
    let peak = args.iter().copied().fold(0.0_f64, f64::max);
    let shifted: Vec<f64> = args.iter().map(|a| (a - peak).exp()).collect();
    let total = (-peak).exp() + shifted.iter().sum::<f64>();
    let value = peak + total.ln();
    (value, shifted.iter().map(|e| e / total).collect())
}

/// Multi-similarity loss averaged over the `m` anchors, and its gradient
/// with respect to each anchor-row entry `S_ik`.
pub fn ms_loss(sim: &SimilarityMatrix, pairs: &MinedPairs, config: &MsLossConfig) -> (f64, Vec<Vec<f64>>) {
    let m = sim.len();
    let mut grad = vec![vec![0.0; m]; m];
    if m == 0 {
        return (0.0, grad);
    }
    let inv_m = 1.0 / m as f64;
    let mut loss = 0.0;
    for i in 0..m {
        let row = &sim.values[i];
        let pos = &pairs.positives[i];
        if !pos.is_empty() {
            let args: Vec<f64> = pos
                .iter()
                .map(|&k| -config.alpha * (row[k] - config.lambda_thr))
                .collect();
            let (value, weights) = soft_plus_sum(&args);
            loss += value / config.alpha;
            for (&k, w) in pos.iter().zip(weights) {
                grad[i][k] -= w * inv_m;
            }
        }
        let neg = &pairs.negatives[i];
        if !neg.is_empty() {
            let args: Vec<f64> = neg
                .iter()
                .map(|&k| config.beta * (row[k] - config.lambda_thr))
                .collect();
            let (value, weights) = soft_plus_sum(&args);
            loss += value / config.beta;
            for (&k, w) in neg.iter().zip(weights) {
                grad[i][k] += w * inv_m;
            }
        }
    }
    (loss * inv_m, grad)
}

/// Chain rule from `dL/dS` to the embeddings, through both operands of each `S_ik`.
pub fn embedding_grads(embeddings: &[Vec<f64>], sim_grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = embeddings.len();
    let dim = embeddings.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; dim]; m];
    for i in 0..m {
        for k in 0..m {
            let g = sim_grad[i][k];
            if g == 0.0 {
                continue;
            }
            for d in 0..dim {
                out[i][d] += g * embeddings[k][d];
                out[k][d] += g * embeddings[i][d];
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-6,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed moments shaped like `shapes`.
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        AdamState {
            config,
            step: 0,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_params(config: AdamConfig, params: &EncoderParams) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Self::new(config, &shapes)
    }

    /// One bias-corrected Adam update. Nothing is modified on error.
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::Shape("parameter groups do not match optimizer state".into()));
        }
        for ((p, g), m) in params.iter().zip(&grads).zip(&self.first) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::Shape("parameter tensor does not match optimizer state".into()));
            }
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }

        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for j in 0..p.len() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut EncoderParams, grads: &ParamGrads) -> Result<()> {
    state.update(params.tensors_mut(), grads.tensors())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Samples drawn from each class per mini-batch.
    pub per_class: usize,
    pub lr: f64,
    /// Feed the type id to the encoder as well.
    pub include_type_id: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            per_class: 10,
            lr: 1e-4,
            include_type_id: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub batch: usize,
    pub epoch: usize,
    pub loss: f64,
    pub n_pos_pairs: usize,
    pub n_neg_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<BatchRecord>,
}

impl TrainHistory {
    pub fn mean_loss(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.records[range];
        slice.iter().map(|r| r.loss).sum::<f64>() / slice.len() as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record(["batch", "epoch", "loss", "n_pos_pairs", "n_neg_pairs"])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Loss, gradient and pair counts for one labeled batch.
pub struct BatchOutcome {
    pub loss: f64,
    pub grads: ParamGrads,
    pub pairs: MinedPairs,
}

pub fn batch_step<S: AsRef<[f64]>>(
    params: &EncoderParams,
    inputs: &[S],
    labels: &[usize],
    loss_cfg: &MsLossConfig,
) -> Result<BatchOutcome> {
    let traces = inputs
        .iter()
        .map(|x| encoder::forward_trace(params, x.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let embeddings: Vec<Vec<f64>> = traces.iter().map(|t| t.embedding.values.clone()).collect();
    let sim = similarity_matrix(&embeddings, labels)?;
    let pairs = mine_pairs(&sim, loss_cfg);
    let (loss, sim_grad) = ms_loss(&sim, &pairs, loss_cfg);
    let out_grads = embedding_grads(&embeddings, &sim_grad);
    let mut grads = params.zeros_like();
    for (trace, g) in traces.iter().zip(&out_grads) {
        debug_assert_eq!(g.len(), EMBEDDING_DIM);
        encoder::backward_trace(params, trace, g, &mut grads)?;
    }
    Ok(BatchOutcome { loss, grads, pairs })
}

/// Episodic training. Each mini-batch takes `per_class` samples from each of
/// the 7 training classes; an epoch is one pass, without replacement, over
/// the smallest class pool.
pub fn train(
    split: &DatasetSplit,
    loss_cfg: &MsLossConfig,
    config: &TrainConfig,
    seed: u64,
) -> Result<(EncoderParams, TrainHistory)> {
    loss_cfg.validate()?;
    if config.per_class == 0 {
        return Err(Error::Config("per_class must be at least 1".into()));
    }
    let input_len = if config.include_type_id {
        crate::datasim::FEATURE_DIM
    } else {
        crate::datasim::ENCODER_INPUT_DIM
    };
    let mut params = encoder::init_params_with_len(seed, input_len)?;
    let mut history = TrainHistory::default();

    let mut pools: Vec<Vec<&[f64]>> = Vec::new();
    for class in ObjectClass::TRAINING {
        let pool: Vec<&[f64]> = split
            .train
            .iter()
            .filter(|s| s.class == class)
            .map(|s| s.encoder_input(config.include_type_id))
            .collect();
        if pool.len() < config.per_class {
            return Err(Error::Shortage {
                class: class.short_name().to_string(),
                needed: config.per_class,
                available: pool.len(),
            });
        }
        pools.push(pool);
    }
    if config.epochs == 0 {
        return Ok((params, history));
    }

    let smallest = pools.iter().map(Vec::len).min().unwrap_or(0);
    let batches_per_epoch = smallest.div_ceil(config.per_class);
    let mut adam = AdamState::for_params(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        &params,
    );
    let mut rng = seed::named_rng(seed, "batches");
    let mut orders: Vec<Vec<usize>> = pools.iter().map(|p| (0..p.len()).collect()).collect();

    let mut batch_no = 0;
    for epoch in 0..config.epochs {
        for order in &mut orders {
            order.shuffle(&mut rng);
        }
        for b in 0..batches_per_epoch {
            let mut inputs = Vec::with_capacity(pools.len() * config.per_class);
            let mut labels = Vec::with_capacity(inputs.capacity());
            for (label, (pool, order)) in pools.iter().zip(&orders).enumerate() {
                for j in 0..config.per_class {
                    let pos = (b * config.per_class + j) % order.len();
                    inputs.push(pool[order[pos]]);
                    labels.push(label);
                }
            }
            let outcome = batch_step(&params, &inputs, &labels, loss_cfg)?;
            adam_step(&mut adam, &mut params, &outcome.grads)?;
            history.records.push(BatchRecord {
                batch: batch_no,
                epoch,
                loss: outcome.loss,
                n_pos_pairs: outcome.pairs.num_positive(),
                n_neg_pairs: outcome.pairs.num_negative(),
            });
            batch_no += 1;
        }
    }
    Ok((params, history))
}
